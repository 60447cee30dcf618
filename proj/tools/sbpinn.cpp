#include "sbpinn/commands.hpp"

int main(int argc, char** argv) { return sbpinn::run_cli(argc, argv); }
