#include "agvsim/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "agvsim/kvfile.hpp"

namespace agvsim {

std::string_view to_string(Variant v) { return v == Variant::M ? "M" : "S"; }

std::string_view to_string(CartState s) {
    switch (s) {
        case CartState::clean: return "clean";
        case CartState::soiled: return "soiled";
        case CartState::washed: return "washed";
    }
    return "?";
}

std::string_view to_string(LinkKind k) { return k == LinkKind::trunk ? "trunk" : "spur"; }

std::string_view to_string(StationKind k) {
    switch (k) {
        case StationKind::MD: return "MD";
        case StationKind::CSSD: return "CSSD";
        case StationKind::CCSA: return "CCSA";
        case StationKind::SCSA: return "SCSA";
        case StationKind::OR_CORE: return "OR_CORE";
        case StationKind::PARKING: return "PARKING";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    if (s == "M") return Variant::M;
    if (s == "S") return Variant::S;
    throw LayoutError("unknown variant '" + std::string(s) + "' (expected M or S)");
}

CartState parse_cart_state(std::string_view s) {
    if (s == "clean") return CartState::clean;
    if (s == "soiled") return CartState::soiled;
    if (s == "washed") return CartState::washed;
    throw LayoutError("unknown cart state '" + std::string(s) + "'");
}

namespace {

StationKind parse_station_kind(std::string_view s, int line) {
    for (auto k : {StationKind::MD, StationKind::CSSD, StationKind::CCSA, StationKind::SCSA,
                   StationKind::OR_CORE, StationKind::PARKING})
        if (to_string(k) == s) return k;
    throw kv::ParseError(line, "unknown station kind '" + std::string(s) + "'");
}

template <class T>
int index_by_id(const std::vector<T>& v, std::string_view id) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> split_alternatives(const std::string& token) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : token) {
        if (c == '|') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

int Link::zone_count() const {
    return std::max(1, static_cast<int>(std::ceil(length_ft / zone_length_ft - 1e-9)));
}

double Link::zone_length(int zone) const {
    int n = zone_count();
    if (zone < n - 1) return zone_length_ft;
    return length_ft - zone_length_ft * (n - 1);
}

bool Elevator::serves(CartState s) const {
    return served_cart_states.empty() ||
           std::find(served_cart_states.begin(), served_cart_states.end(), s) !=
               served_cart_states.end();
}

int NetworkSpec::node_index(std::string_view id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i] == id) return static_cast<int>(i);
    return -1;
}
int NetworkSpec::link_index(std::string_view id) const { return index_by_id(links, id); }
int NetworkSpec::station_index(std::string_view id) const { return index_by_id(stations, id); }
int NetworkSpec::elevator_index(std::string_view id) const { return index_by_id(elevators, id); }

int NetworkSpec::station_at_node(int node) const {
    for (std::size_t i = 0; i < stations.size(); ++i)
        if (stations[i].node == node) return static_cast<int>(i);
    return -1;
}

int NetworkSpec::station_of_kind(StationKind k) const {
    for (std::size_t i = 0; i < stations.size(); ++i)
        if (stations[i].kind == k) return static_cast<int>(i);
    return -1;
}

const RouteSpec* NetworkSpec::find_route(CartState s, Variant v) const {
    for (const auto& r : routes)
        if (r.cart_state == s && r.variant == v) return &r;
    return nullptr;
}

const RouteSpec& NetworkSpec::active_route(CartState s) const {
    if (const auto* r = find_route(s, variant)) return *r;
    throw LayoutError("no " + std::string(to_string(s)) + " route for variant " +
                      std::string(to_string(variant)));
}

bool ValidationReport::has(std::string_view code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.code == code; });
}

NetworkSpec parse_layout(std::string_view text) {
    kv::Document doc = kv::parse(text);
    NetworkSpec spec;
    doc.top().reject_unknown({});

    for (const auto& s : doc.sections) {
        if (s.name.empty()) continue;
        if (s.name != "node" && s.name != "link" && s.name != "station" &&
            s.name != "elevator" && s.name != "route")
            throw kv::ParseError(s.line, "unknown section [" + s.name + "]");
    }

    auto add_node = [&](const kv::Value& v) {
        const std::string& id = v.as_text();
        if (id.empty()) throw kv::ParseError(v.line, "empty node id");
        if (spec.node_index(id) >= 0) throw kv::ParseError(v.line, "duplicate node id " + id);
        spec.nodes.push_back(id);
    };
    for (const auto* s : doc.all("node")) {
        s->reject_unknown({"id", "ids"});
        if (const auto* e = s->find("id")) add_node(e->value);
        if (const auto* e = s->find("ids"))
            for (const auto& v : e->value.as_array()) add_node(v);
        if (!s->find("id") && !s->find("ids"))
            throw kv::ParseError(s->line, "[node] needs id or ids");
    }

    auto node_ref = [&](const kv::Value& v) {
        int n = spec.node_index(v.as_text());
        if (n < 0) throw kv::ParseError(v.line, "unknown node " + v.as_text());
        return n;
    };

    for (const auto* s : doc.all("link")) {
        s->reject_unknown({"id", "from", "to", "length_ft", "kind", "zone_length_ft", "turning"});
        Link l;
        l.id = s->require("id").as_text();
        if (spec.link_index(l.id) >= 0)
            throw kv::ParseError(s->line, "duplicate link id " + l.id);
        l.from = node_ref(s->require("from"));
        l.to = node_ref(s->require("to"));
        l.length_ft = s->require("length_ft").as_number();
        const auto& kind = s->require("kind");
        if (kind.as_text() == "trunk")
            l.kind = LinkKind::trunk;
        else if (kind.as_text() == "spur")
            l.kind = LinkKind::spur;
        else
            throw kv::ParseError(kind.line, "link kind must be trunk or spur");
        if (const auto* e = s->find("zone_length_ft")) l.zone_length_ft = e->value.as_number();
        if (const auto* e = s->find("turning")) l.turning = e->value.as_bool();
        if (l.length_ft <= 0) throw kv::ParseError(s->line, "link " + l.id + ": length_ft must be > 0");
        if (l.zone_length_ft <= 0)
            throw kv::ParseError(s->line, "link " + l.id + ": zone_length_ft must be > 0");
        spec.links.push_back(std::move(l));
    }

    for (const auto* s : doc.all("station")) {
        s->reject_unknown({"id", "node", "kind", "detent_capacity"});
        Station st;
        st.id = s->require("id").as_text();
        if (spec.station_index(st.id) >= 0)
            throw kv::ParseError(s->line, "duplicate station id " + st.id);
        st.node = node_ref(s->require("node"));
        const auto& kind = s->require("kind");
        st.kind = parse_station_kind(kind.as_text(), kind.line);
        if (const auto* e = s->find("detent_capacity"))
            st.detent_capacity = static_cast<int>(e->value.as_integer());
        else
            st.detent_capacity = st.kind == StationKind::PARKING ? 0 : 1;
        spec.stations.push_back(std::move(st));
    }

    for (const auto* s : doc.all("elevator")) {
        s->reject_unknown({"id", "node", "to_node", "agv_capacity", "door_delay_s", "ride_s",
                           "board_ft", "served_cart_states"});
        Elevator el;
        el.id = s->require("id").as_text();
        if (spec.elevator_index(el.id) >= 0 || spec.link_index(el.id) >= 0)
            throw kv::ParseError(s->line, "duplicate elevator id " + el.id);
        el.node = node_ref(s->require("node"));
        el.to_node = node_ref(s->require("to_node"));
        el.agv_capacity = static_cast<int>(s->require("agv_capacity").as_integer());
        if (const auto* e = s->find("door_delay_s")) el.door_delay_s = e->value.as_number();
        if (const auto* e = s->find("ride_s")) el.ride_s = e->value.as_number();
        if (const auto* e = s->find("board_ft")) el.board_ft = e->value.as_number();
        if (const auto* e = s->find("served_cart_states")) {
            for (const auto& v : e->value.as_array()) {
                try {
                    el.served_cart_states.push_back(parse_cart_state(v.as_text()));
                } catch (const LayoutError& err) {
                    throw kv::ParseError(v.line, err.what());
                }
            }
        }
        spec.elevators.push_back(std::move(el));
    }

    for (const auto* s : doc.all("route")) {
        s->reject_unknown({"id", "cart_state", "variant", "links", "lookahead"});
        RouteSpec r;
        r.line = s->line;
        try {
            r.cart_state = parse_cart_state(s->require("cart_state").as_text());
            r.variant = parse_variant(s->require("variant").as_text());
        } catch (const LayoutError& err) {
            throw kv::ParseError(s->line, err.what());
        }
        r.id = s->find("id") ? s->find("id")->value.as_text()
                             : std::string(to_string(r.cart_state)) + "-" +
                                   std::string(to_string(r.variant));
        for (const auto& v : s->require("links").as_array()) {
            for (const auto& alt : split_alternatives(v.as_text())) {
                if (spec.link_index(alt) < 0 && spec.elevator_index(alt) < 0)
                    throw kv::ParseError(v.line, "unknown link " + alt);
            }
            r.link_sequence.push_back(v.as_text());
        }
        if (const auto* e = s->find("lookahead")) {
            const std::string& t = e->value.as_text();
            auto colon = t.find(':');
            if (colon == std::string::npos)
                throw kv::ParseError(e->line, "lookahead must be \"link:zone\"");
            Lookahead la;
            la.link = spec.link_index(t.substr(0, colon));
            if (la.link < 0) throw kv::ParseError(e->line, "unknown link " + t.substr(0, colon));
            try {
                la.zone = std::stoi(t.substr(colon + 1));
            } catch (const std::exception&) {
                throw kv::ParseError(e->line, "bad lookahead zone in \"" + t + "\"");
            }
            r.lookahead = la;
        }
        spec.routes.push_back(std::move(r));
    }
    return spec;
}

ResolvedRoute resolve_route(const NetworkSpec& spec, const RouteSpec& route) {
    ResolvedRoute out;
    out.spec = &route;
    if (route.link_sequence.empty()) throw LayoutError("route " + route.id + " has no links");

    auto fail = [&](std::size_t step) -> LayoutError {
        return LayoutError("route discontinuity in " + route.id + " at step " +
                           std::to_string(step) + " (" + route.link_sequence[step] + ")");
    };

    // Steps whose end points are ambiguous (spurs, elevators) chain from the
    // node reached so far; the first step chains from a station node.
    auto endpoints = [&](std::size_t step) {
        std::vector<std::pair<int, int>> dirs;  // (from, to) allowed
        auto alts = split_alternatives(route.link_sequence[step]);
        int l = spec.link_index(alts.front());
        if (l >= 0 && alts.size() == 1) {
            const Link& lk = spec.links[l];
            dirs.emplace_back(lk.from, lk.to);
            if (lk.kind == LinkKind::spur) dirs.emplace_back(lk.to, lk.from);
        } else {
            int e = spec.elevator_index(alts.front());
            if (e < 0) throw fail(step);
            const Elevator& el = spec.elevators[e];
            dirs.emplace_back(el.node, el.to_node);
            dirs.emplace_back(el.to_node, el.node);
        }
        return dirs;
    };

    int at = -1;
    for (std::size_t i = 0; i < route.link_sequence.size(); ++i) {
        auto dirs = endpoints(i);
        int from = -1, to = -1;
        for (auto [f, t] : dirs) {
            if (at < 0 ? spec.station_at_node(f) >= 0 : f == at) {
                from = f;
                to = t;
                break;
            }
        }
        if (from < 0) throw fail(i);
        Leg leg;
        leg.from_node = from;
        leg.to_node = to;
        auto alts = split_alternatives(route.link_sequence[i]);
        int l = spec.link_index(alts.front());
        if (l >= 0 && alts.size() == 1) {
            leg.kind = Leg::Kind::link;
            leg.link = l;
            leg.reverse = spec.links[l].from != from;
            out.length_ft += spec.links[l].length_ft;
        } else {
            leg.kind = Leg::Kind::elevator;
            for (const auto& a : alts) {
                int e = spec.elevator_index(a);
                if (e < 0) throw fail(i);
                const Elevator& el = spec.elevators[e];
                bool same = (el.node == from && el.to_node == to) ||
                            (el.node == to && el.to_node == from);
                if (!same) throw fail(i);
                leg.elevators.push_back(e);
            }
        }
        if (i == 0) out.origin_station = spec.station_at_node(from);
        out.legs.push_back(std::move(leg));
        at = to;
    }
    out.dest_station = spec.station_at_node(at);
    if (out.dest_station < 0)
        throw LayoutError("route " + route.id + " does not end at a station node");
    return out;
}

namespace {

// Undirected reachability over a set of links/elevators.
bool connected(const NetworkSpec& spec, int a, int b, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(spec.nodes.size());
    for (auto [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::vector<char> seen(spec.nodes.size(), 0);
    std::queue<int> q;
    q.push(a);
    seen[a] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == b) return true;
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                q.push(v);
            }
    }
    return false;
}

// Directed reachability over the full network (trunks one-way; spurs and
// elevators both ways; station nodes are never passed through).
bool directed_reachable(const NetworkSpec& spec, int a, int b) {
    std::vector<std::vector<int>> adj(spec.nodes.size());
    for (const auto& l : spec.links) {
        adj[l.from].push_back(l.to);
        if (l.kind == LinkKind::spur) adj[l.to].push_back(l.from);
    }
    for (const auto& e : spec.elevators) {
        adj[e.node].push_back(e.to_node);
        adj[e.to_node].push_back(e.node);
    }
    std::vector<char> seen(spec.nodes.size(), 0);
    std::queue<int> q;
    q.push(a);
    seen[a] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        if (u == b) return true;
        if (u != a && spec.station_at_node(u) >= 0) continue;
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                q.push(v);
            }
    }
    return false;
}

}  // namespace

ValidationReport validate_network(const NetworkSpec& spec) {
    ValidationReport rep;
    auto add = [&](std::string code, std::string msg) {
        rep.violations.push_back({std::move(code), std::move(msg)});
    };

    for (const auto& l : spec.links) {
        if (l.from < 0 || l.to < 0 || l.from >= static_cast<int>(spec.nodes.size()) ||
            l.to >= static_cast<int>(spec.nodes.size()))
            add("dangling-node", "link " + l.id + " references an undeclared node");
        if (!(l.length_ft > 0)) add("link-length", "link " + l.id + " has non-positive length");
        if (!(l.zone_length_ft > 0))
            add("zone-length", "link " + l.id + " has non-positive zone length");
        if (l.from == l.to) add("self-loop", "link " + l.id + " starts and ends at the same node");
    }
    for (const auto& e : spec.elevators) {
        if (e.agv_capacity < 1) add("elevator-capacity", "elevator " + e.id + " capacity < 1");
        if (e.door_delay_s < 0) add("door-delay", "elevator " + e.id + " has negative door delay");
        if (e.ride_s < 0) add("ride-time", "elevator " + e.id + " has negative ride time");
        if (e.node == e.to_node) add("elevator-landings", "elevator " + e.id + " has one landing");
    }
    for (const auto& s : spec.stations) {
        if (s.kind != StationKind::PARKING && s.detent_capacity < 1)
            add("detent-capacity", "station " + s.id + " needs at least one detent");
        for (const auto& l : spec.links)
            if ((l.from == s.node || l.to == s.node) && l.kind != LinkKind::spur)
                add("station-access", "station " + s.id + " is reached by trunk link " + l.id);
    }

    std::set<std::pair<int, int>> seen_pairs;
    std::vector<std::pair<int, int>> route_edges;
    for (const auto& r : spec.routes) {
        auto key = std::make_pair(static_cast<int>(r.cart_state), static_cast<int>(r.variant));
        if (!seen_pairs.insert(key).second)
            add("duplicate-route", "more than one " + std::string(to_string(r.cart_state)) +
                                       " route for variant " + std::string(to_string(r.variant)));
        try {
            ResolvedRoute rr = resolve_route(spec, r);
            for (const auto& leg : rr.legs) {
                route_edges.emplace_back(leg.from_node, leg.to_node);
                if (leg.kind == Leg::Kind::elevator)
                    for (int e : leg.elevators)
                        if (!spec.elevators[e].serves(r.cart_state))
                            add("elevator-service", "elevator " + spec.elevators[e].id +
                                                        " does not serve " +
                                                        std::string(to_string(r.cart_state)) +
                                                        " carts (route " + r.id + ")");
            }
            if (rr.origin_station == rr.dest_station)
                add("route-endpoints", "route " + r.id + " starts and ends at the same station");
            if (r.lookahead) {
                bool on_route = false;
                for (const auto& leg : rr.legs)
                    on_route = on_route || (leg.kind == Leg::Kind::link && leg.link == r.lookahead->link);
                if (!on_route)
                    add("lookahead", "lookahead of route " + r.id + " is not on the route");
                else if (r.lookahead->zone < 0 ||
                         r.lookahead->zone >= spec.links[r.lookahead->link].zone_count())
                    add("lookahead", "lookahead zone out of range on route " + r.id);
                else if (spec.links[r.lookahead->link].kind == LinkKind::spur)
                    add("lookahead", "lookahead of route " + r.id + " lies on a spur");
            }
        } catch (const LayoutError& e) {
            std::string msg = e.what();
            add(msg.rfind("route discontinuity", 0) == 0 ? "route-discontinuity" : "route-endpoints",
                msg);
        }
    }
    for (auto s : kCartStates)
        for (auto v : {Variant::M, Variant::S})
            if (!spec.find_route(s, v))
                add("missing-route", "no " + std::string(to_string(s)) + " route for variant " +
                                         std::string(to_string(v)));

    // Stations that carts move between must be linked by the union of the
    // declared routes; every station must be reachable for empty repositioning.
    for (std::size_t i = 0; i < spec.stations.size(); ++i) {
        for (std::size_t j = 0; j < spec.stations.size(); ++j) {
            if (i == j) continue;
            const auto& a = spec.stations[i];
            const auto& b = spec.stations[j];
            if (i < j && a.kind != StationKind::PARKING && b.kind != StationKind::PARKING &&
                !route_edges.empty() && !connected(spec, a.node, b.node, route_edges))
                add("connectivity", "stations " + a.id + " and " + b.id +
                                        " are not connected by the declared routes");
            if (!directed_reachable(spec, a.node, b.node))
                add("reachability", "no guide-path from " + a.id + " to " + b.id);
        }
    }
    return rep;
}

NetworkSpec apply_variant(const NetworkSpec& spec, Variant v) {
    for (auto s : kCartStates)
        if (!spec.find_route(s, v))
            throw LayoutError("layout has no " + std::string(to_string(s)) + " route for variant " +
                              std::string(to_string(v)));
    NetworkSpec out = spec;
    out.variant = v;
    return out;
}

NetworkSpec reference_layout() { return parse_layout(reference_layout_text()); }

}  // namespace agvsim
