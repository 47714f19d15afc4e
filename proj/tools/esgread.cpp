#include "esgread/cli.hpp"

int main(int argc, char** argv) { return esgread::cli::dispatch(argc, argv); }
