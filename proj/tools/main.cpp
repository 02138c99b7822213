#include <dbgnn/pipeline.hpp>

#include <iostream>

extern char** environ;

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    return dbgnn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr, environ);
}
