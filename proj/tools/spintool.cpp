#include "spintool/cli.hpp"

int main(int argc, char** argv) {
    return spintool::cli::run({argv + 1, argv + argc});
}
