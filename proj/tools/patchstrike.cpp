#include <iostream>
#include <string>
#include <vector>

#include "patchstrike/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h") {
    std::cout << patchstrike::usage_text();
    return args.empty() ? 2 : 0;
  }
  try {
    return patchstrike::dispatch(patchstrike::parse_config(args));
  } catch (const patchstrike::IoError& e) {
    std::cerr << "patchstrike: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "patchstrike: " << e.what() << "\n";
    return 2;
  }
}
