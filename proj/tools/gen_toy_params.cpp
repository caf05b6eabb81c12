#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "ale/toy_backend.hpp"

// Regenerates the frozen toy backend parameter file. The library loads this
// file at runtime instead of regenerating it, so reference outputs stay
// stable across library changes.
int main(int argc, char** argv) {
  std::string out = "data/toy_backend_params.bin";
  std::uint64_t seed = ale::ToyBackendConfig{}.seed;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      out = argv[++i];
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--out path] [--seed n]\n", argv[0]);
      return 2;
    }
  }
  ale::ToyBackendConfig config;
  config.seed = seed;
  const ale::ToyParams params = ale::ToyBackend::generate_params(config);
  ale::ToyBackend::save(out, config, params);
  std::printf("wrote %s (seed %llu)\n", out.c_str(),
              static_cast<unsigned long long>(seed));
  return 0;
}
