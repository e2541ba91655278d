#include "agvsim/kvfile.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace agvsim::kv {

const std::string& Value::as_text() const {
    if (kind != Kind::string && kind != Kind::bare && kind != Kind::number)
        throw ParseError(line, "expected a string value");
    return text;
}

double Value::as_number() const {
    if (kind != Kind::number) throw ParseError(line, "expected a number, got '" + text + "'");
    return number;
}

long long Value::as_integer() const {
    double v = as_number();
    if (std::floor(v) != v) throw ParseError(line, "expected an integer, got " + text);
    return static_cast<long long>(v);
}

bool Value::as_bool() const {
    if (kind == Kind::bare && text == "true") return true;
    if (kind == Kind::bare && text == "false") return false;
    throw ParseError(line, "expected true or false, got '" + text + "'");
}

const std::vector<Value>& Value::as_array() const {
    if (kind != Kind::array) throw ParseError(line, "expected an array");
    return items;
}

const std::vector<std::pair<std::string, Value>>& Value::as_table() const {
    if (kind != Kind::table) throw ParseError(line, "expected an inline table");
    return fields;
}

const Entry* Section::find(std::string_view key) const {
    for (const auto& e : entries)
        if (e.key == key) return &e;
    return nullptr;
}

const Value& Section::require(std::string_view key) const {
    if (const auto* e = find(key)) return e->value;
    std::string where = name.empty() ? "top level" : "[" + name + "]";
    throw ParseError(line, "missing required key '" + std::string(key) + "' in " + where);
}

void Section::reject_unknown(std::initializer_list<std::string_view> allowed) const {
    for (const auto& e : entries) {
        bool ok = false;
        for (auto a : allowed) ok = ok || e.key == a;
        if (!ok) {
            std::string where = name.empty() ? "top level" : "[" + name + "]";
            throw ParseError(e.line, "unknown key '" + e.key + "' in " + where);
        }
    }
}

std::vector<const Section*> Document::all(std::string_view name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    Document run() {
        Document doc;
        doc.sections.push_back(Section{"", 1, {}});
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                int ln = line_;
                ++pos_;
                std::string name = read_ident();
                skip_inline_ws();
                if (eof() || peek() != ']') fail("expected ']' after section name");
                ++pos_;
                expect_end_of_line();
                if (name.empty()) fail(ln, "empty section name");
                doc.sections.push_back(Section{name, ln, {}});
                continue;
            }
            Entry e;
            e.line = line_;
            e.key = read_key();
            if (e.key.empty()) fail("expected a key");
            skip_inline_ws();
            if (eof() || peek() != '=') fail("expected '=' after key '" + e.key + "'");
            ++pos_;
            skip_inline_ws();
            e.value = read_value(0);
            expect_end_of_line();
            auto& sec = doc.sections.back();
            if (sec.find(e.key)) fail(e.line, "duplicate key '" + e.key + "'");
            sec.entries.push_back(std::move(e));
        }
        return doc;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    int line_ = 1;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }
    [[noreturn]] void fail(int ln, const std::string& msg) const { throw ParseError(ln, msg); }

    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
    }

    void skip_comment() {
        if (!eof() && peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }

    // Whitespace, comments and newlines; used inside brackets.
    void skip_any_ws() {
        while (!eof()) {
            char c = peek();
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '#') {
                skip_comment();
            } else {
                break;
            }
        }
    }

    void skip_blank_lines() { skip_any_ws(); }

    void expect_end_of_line() {
        skip_inline_ws();
        skip_comment();
        if (eof()) return;
        if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "'");
        ++pos_;
        ++line_;
    }

    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    }

    std::string read_ident() {
        std::size_t b = pos_;
        while (!eof() && ident_char(peek())) ++pos_;
        return std::string(s_.substr(b, pos_ - b));
    }

    std::string read_key() { return read_ident(); }

    Value read_value(int depth) {
        if (eof()) fail("missing value");
        Value v;
        v.line = line_;
        char c = peek();
        if (c == '"') {
            v.kind = Value::Kind::string;
            ++pos_;
            while (true) {
                if (eof() || peek() == '\n') fail("unterminated string");
                char d = peek();
                ++pos_;
                if (d == '"') break;
                if (d == '\\' && !eof()) {
                    char e = peek();
                    ++pos_;
                    d = e == 'n' ? '\n' : e == 't' ? '\t' : e;
                }
                v.text.push_back(d);
            }
            return v;
        }
        if (c == '[') {
            v.kind = Value::Kind::array;
            ++pos_;
            skip_any_ws();
            if (!eof() && peek() == ']') {
                ++pos_;
                return v;
            }
            while (true) {
                skip_any_ws();
                v.items.push_back(read_value(depth + 1));
                skip_any_ws();
                if (eof()) fail(v.line, "unterminated array");
                if (peek() == ',') {
                    ++pos_;
                    skip_any_ws();
                    if (!eof() && peek() == ']') {
                        ++pos_;
                        return v;
                    }
                    continue;
                }
                if (peek() == ']') {
                    ++pos_;
                    return v;
                }
                fail("expected ',' or ']' in array");
            }
        }
        if (c == '{') {
            v.kind = Value::Kind::table;
            ++pos_;
            skip_any_ws();
            if (!eof() && peek() == '}') {
                ++pos_;
                return v;
            }
            while (true) {
                skip_any_ws();
                std::string key = read_key();
                if (key.empty()) fail("expected a key in inline table");
                skip_inline_ws();
                if (eof() || peek() != '=') fail("expected '=' in inline table");
                ++pos_;
                skip_any_ws();
                for (const auto& f : v.fields)
                    if (f.first == key) fail("duplicate key '" + key + "' in inline table");
                v.fields.emplace_back(key, read_value(depth + 1));
                skip_any_ws();
                if (eof()) fail(v.line, "unterminated inline table");
                if (peek() == ',') {
                    ++pos_;
                    continue;
                }
                if (peek() == '}') {
                    ++pos_;
                    return v;
                }
                fail("expected ',' or '}' in inline table");
            }
        }
        return read_bare(depth);
    }

    // Numbers and bare literals. At depth 0 the literal runs to end of line
    // (comments excluded); inside containers it stops at ',', ']' or '}'
    // outside parentheses.
    Value read_bare(int depth) {
        Value v;
        v.line = line_;
        std::string out;
        int parens = 0;
        while (!eof()) {
            char c = peek();
            if (parens == 0) {
                if (c == '\n' || c == '#') break;
                if (depth > 0 && (c == ',' || c == ']' || c == '}')) break;
            }
            if (c == '\n') ++line_;
            if (c == '(') ++parens;
            if (c == ')') {
                if (parens == 0) fail("unbalanced ')'");
                --parens;
            }
            out.push_back(c);
            ++pos_;
        }
        if (parens != 0) fail(v.line, "unbalanced '(' in literal");
        while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
        if (out.empty()) fail("missing value");
        v.text = out;
        double num = 0.0;
        const char* b = out.data();
        const char* e = out.data() + out.size();
        if (*b == '+') ++b;
        auto [ptr, ec] = std::from_chars(b, e, num);
        if (ec == std::errc() && ptr == e) {
            v.kind = Value::Kind::number;
            v.number = num;
        } else {
            v.kind = Value::Kind::bare;
        }
        return v;
    }
};

}  // namespace

Document parse(std::string_view text) { return Parser(text).run(); }

}  // namespace agvsim::kv
