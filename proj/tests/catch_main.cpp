// Catch2 v3 amalgamated translation unit supplies main().
#include <catch2/catch_amalgamated.hpp>
