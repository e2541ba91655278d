#pragma once

// Guided-path network description: nodes, zoned links, stations, elevators
// and the declared loaded routes for both elevator-role variants.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace agvsim {

enum class Variant { M, S };
enum class CartState { clean, soiled, washed };
enum class LinkKind { trunk, spur };
enum class StationKind { MD, CSSD, CCSA, SCSA, OR_CORE, PARKING };

inline constexpr std::array<CartState, 3> kCartStates{CartState::clean, CartState::soiled,
                                                      CartState::washed};

std::string_view to_string(Variant v);
std::string_view to_string(CartState s);
std::string_view to_string(LinkKind k);
std::string_view to_string(StationKind k);
Variant parse_variant(std::string_view s);
CartState parse_cart_state(std::string_view s);

class LayoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Link {
    std::string id;
    int from = -1;
    int to = -1;
    double length_ft = 0.0;
    LinkKind kind = LinkKind::trunk;
    double zone_length_ft = 3.0;
    bool turning = false;

    /// ceil(length / zone_length), at least 1.
    int zone_count() const;
    /// Every zone is zone_length long except the last, which takes the remainder.
    double zone_length(int zone) const;
};

struct Elevator {
    std::string id;
    int node = -1;     // landing on the first floor
    int to_node = -1;  // landing on the other floor
    int agv_capacity = 1;
    double door_delay_s = 11.0;
    double ride_s = 15.0;   // landing-to-landing travel
    double board_ft = 6.0;  // distance covered when boarding
    std::vector<CartState> served_cart_states;

    bool serves(CartState s) const;
    int other_landing(int landing) const { return landing == node ? to_node : node; }
};

struct Station {
    std::string id;
    int node = -1;
    StationKind kind = StationKind::MD;
    int detent_capacity = 1;
};

struct Lookahead {
    int link = -1;
    int zone = 0;
};

/// One resolved traversal step of a route: a link in a direction, or an
/// elevator ride between two landings (any elevator in `elevators`).
struct Leg {
    enum class Kind { link, elevator };
    Kind kind = Kind::link;
    int link = -1;
    bool reverse = false;
    std::vector<int> elevators;
    int from_node = -1;
    int to_node = -1;
};

struct RouteSpec {
    std::string id;
    CartState cart_state = CartState::clean;
    Variant variant = Variant::M;
    std::vector<std::string> link_sequence;  // link or elevator ids; "G|K" lists alternatives
    std::optional<Lookahead> lookahead;
    int line = 0;
};

struct ResolvedRoute {
    const RouteSpec* spec = nullptr;
    int origin_station = -1;
    int dest_station = -1;
    std::vector<Leg> legs;
    double length_ft = 0.0;
};

struct NetworkSpec {
    std::vector<std::string> nodes;
    std::vector<Link> links;
    std::vector<Station> stations;
    std::vector<Elevator> elevators;
    std::vector<RouteSpec> routes;
    Variant variant = Variant::M;

    int node_index(std::string_view id) const;     // -1 if absent
    int link_index(std::string_view id) const;
    int station_index(std::string_view id) const;
    int elevator_index(std::string_view id) const;
    int station_at_node(int node) const;
    int station_of_kind(StationKind k) const;

    /// Route for (state, variant); nullptr if none declared.
    const RouteSpec* find_route(CartState s, Variant v) const;
    /// Route for `s` under the active variant; throws LayoutError if missing.
    const RouteSpec& active_route(CartState s) const;
};

/// Parses layout text; throws kv::ParseError (syntax, dangling references,
/// duplicate ids, unknown keys). Defaults: zone_length 3 ft, door_delay 11 s.
NetworkSpec parse_layout(std::string_view text);

/// Resolves a declared route into directed legs. Throws LayoutError with a
/// "route discontinuity" message when consecutive steps do not chain.
ResolvedRoute resolve_route(const NetworkSpec& spec, const RouteSpec& route);

struct Violation {
    std::string code;  // e.g. "route-discontinuity"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    bool has(std::string_view code) const;
};

ValidationReport validate_network(const NetworkSpec& spec);

/// Copy of `spec` whose active routes are those of `v`; throws LayoutError
/// when the layout declares no routes for `v`.
NetworkSpec apply_variant(const NetworkSpec& spec, Variant v);

/// Loads the layout that ships with the project (data/reference_layout.agv).
NetworkSpec reference_layout();
std::string_view reference_layout_text();

}  // namespace agvsim
