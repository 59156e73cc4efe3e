#include "stenograph/cli.hpp"

int main(int argc, char** argv) { return stenograph::cli::run(argc, argv); }
