// Regenerates the fixture corpus shipped under data/fixture/. The output is
// deterministic, so rerunning this tool must leave the checked-in files
// unchanged unless the generator itself changed.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>

#include "sentmtl/synthetic.hpp"

int main(int argc, char** argv)
{
    std::string dir = "data/fixture";
    std::uint64_t seed = sentmtl::synthetic::kFixtureSeed;
    if (argc > 1) dir = argv[1];
    if (argc > 2) seed = std::strtoull(argv[2], nullptr, 10);
    sentmtl::synthetic::write_fixture(dir, seed);
    std::cout << "wrote fixture corpus to " << dir << " (seed " << seed << ")\n";
    return 0;
}
