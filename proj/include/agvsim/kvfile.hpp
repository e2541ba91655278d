#pragma once

// Minimal structured-text format shared by layout and scenario files.
//
//   # comment
//   key = value            top-level entries
//   [section]              every header opens a new record
//   key = "string" | 12.5 | bare-literal | [v, v, ...] | {k = v, ...}
//
// Bare literals run to the end of the value and may contain balanced
// parentheses, so `TRIA(60,68,75)` and `DISC(0.1,0,1,30)` need no quoting.
// Brackets, braces and parentheses may span lines.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace agvsim::kv {

class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

struct Value {
    enum class Kind { string, number, bare, array, table };

    Kind kind = Kind::bare;
    std::string text;  // string contents, number spelling, or bare literal
    double number = 0.0;
    std::vector<Value> items;                          // array
    std::vector<std::pair<std::string, Value>> fields;  // table
    int line = 0;

    bool is_string() const { return kind == Kind::string; }
    bool is_number() const { return kind == Kind::number; }

    /// String or bare literal text; throws otherwise.
    const std::string& as_text() const;
    double as_number() const;
    long long as_integer() const;
    bool as_bool() const;
    const std::vector<Value>& as_array() const;
    const std::vector<std::pair<std::string, Value>>& as_table() const;
};

struct Entry {
    std::string key;
    Value value;
    int line = 0;
};

struct Section {
    std::string name;  // empty for the top-level block
    int line = 0;
    std::vector<Entry> entries;

    const Entry* find(std::string_view key) const;
    const Value& require(std::string_view key) const;
    /// Throws ParseError naming the first key not in `allowed`.
    void reject_unknown(std::initializer_list<std::string_view> allowed) const;
};

struct Document {
    std::vector<Section> sections;  // sections[0] is the top-level block

    const Section& top() const { return sections.front(); }
    std::vector<const Section*> all(std::string_view name) const;
};

Document parse(std::string_view text);

}  // namespace agvsim::kv
