#include "doctest.h"

#include <set>

#include "agvsim/kvfile.hpp"
#include "agvsim/layout.hpp"

using namespace agvsim;

namespace {

const char* kMinimal = R"(
[node]
ids = [A, B]
[link]
id = l1
from = A
to = B
length_ft = 10
kind = spur
[station]
id = S1
node = A
kind = MD
[station]
id = S2
node = B
kind = CSSD
)";

std::set<std::string> active_ids(const NetworkSpec& n) {
    std::set<std::string> out;
    for (auto s : kCartStates) out.insert(n.active_route(s).id);
    return out;
}

}  // namespace

TEST_CASE("layout: minimal network") {
    auto n = parse_layout(kMinimal);
    REQUIRE(n.links.size() == 1);
    CHECK(n.links[0].zone_count() == 4);
    CHECK(n.links[0].zone_length(3) == doctest::Approx(1.0));
    CHECK(n.links[0].zone_length_ft == 3.0);
}

TEST_CASE("layout: zone partition covers each link") {
    auto n = reference_layout();
    for (const auto& l : n.links) {
        double sum = 0;
        for (int z = 0; z < l.zone_count(); ++z) {
            CHECK(l.zone_length(z) <= l.zone_length_ft + 1e-12);
            CHECK(l.zone_length(z) > 0);
            sum += l.zone_length(z);
        }
        CHECK(sum >= l.length_ft - 1e-9);
    }
}

TEST_CASE("layout: reference layout elevators and validity") {
    auto n = reference_layout();
    CHECK(n.elevators[n.elevator_index("J")].agv_capacity == 2);
    CHECK(n.elevators[n.elevator_index("G")].agv_capacity == 3);
    CHECK(n.elevators[n.elevator_index("K")].agv_capacity == 3);
    CHECK(n.elevators[n.elevator_index("J")].door_delay_s == 11.0);
    auto rep = validate_network(n);
    for (const auto& v : rep.violations) MESSAGE(v.code << ": " << v.message);
    CHECK(rep.ok());
}

TEST_CASE("layout: referential errors") {
    std::string bad = std::string(kMinimal) + "[link]\nid = l2\nfrom = A\nto = X9\nlength_ft = 3\nkind = trunk\n";
    CHECK_THROWS_WITH(parse_layout(bad), doctest::Contains("unknown node X9"));
    std::string dup = std::string(kMinimal) + "[link]\nid = l1\nfrom = A\nto = B\nlength_ft = 3\nkind = trunk\n";
    CHECK_THROWS_WITH(parse_layout(dup), doctest::Contains("duplicate link id l1"));
    std::string unk = std::string(kMinimal) + "[station]\nid = S3\nnode = A\nkind = MD\ncolour = red\n";
    CHECK_THROWS_WITH(parse_layout(unk), doctest::Contains("unknown key 'colour'"));
}

TEST_CASE("layout: route discontinuity is reported") {
    auto text = std::string(reference_layout_text());
    auto pos = text.find("links = [s_cssd, w2, s_md]");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, std::string("links = [s_cssd, w2, s_md]").size(), "links = [s_cssd, w1, s_md]");
    auto rep = validate_network(parse_layout(text));
    CHECK(rep.has("route-discontinuity"));
}

TEST_CASE("layout: shared spur across routes is allowed") {
    auto n = reference_layout();
    // s_cssd is on both the soiled and the washed route of each variant.
    CHECK(validate_network(n).ok());
}

TEST_CASE("layout: variants") {
    auto base = reference_layout();
    auto m = apply_variant(base, Variant::M);
    auto s = apply_variant(base, Variant::S);

    auto uses_elevator = [](const NetworkSpec& n, CartState cs, const char* id) {
        auto rr = resolve_route(n, n.active_route(cs));
        for (const auto& leg : rr.legs)
            if (leg.kind == Leg::Kind::elevator)
                for (int e : leg.elevators)
                    if (n.elevators[e].id == id) return true;
        return false;
    };
    CHECK(uses_elevator(m, CartState::clean, "J"));
    CHECK(uses_elevator(s, CartState::clean, "G"));
    CHECK(uses_elevator(s, CartState::clean, "K"));
    CHECK(uses_elevator(s, CartState::soiled, "J"));
    CHECK(uses_elevator(m, CartState::soiled, "G"));

    CHECK(active_ids(apply_variant(m, Variant::M)) == active_ids(m));
    CHECK(active_ids(apply_variant(apply_variant(m, Variant::S), Variant::M)) == active_ids(m));

    auto rr_s = resolve_route(s, s.active_route(CartState::clean));
    CHECK(s.stations[rr_s.dest_station].kind == StationKind::SCSA);

    NetworkSpec only_m = base;
    std::erase_if(only_m.routes, [](const RouteSpec& r) { return r.variant == Variant::S; });
    CHECK_THROWS_AS(apply_variant(only_m, Variant::S), LayoutError);
}
