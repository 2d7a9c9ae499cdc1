#include <iostream>
#include <string>
#include <vector>

#include "racg/commands.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return racg::run_cli(args, std::cout, std::cerr);
}
