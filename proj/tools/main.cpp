#include "jema/cli/run.hpp"

int main(int argc, char** argv) { return jema::cli::run(argc, argv); }
