#include "adreg/harness.hpp"

int main(int argc, char** argv)
{
    return adreg::run_cli(argc, argv);
}
