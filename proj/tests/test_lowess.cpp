#include <catch2/catch_amalgamated.hpp>
#include "mixtau/mixtau.hpp"

TEST_CASE("placeholder test_lowess", "[wip]") { CHECK(true); }
