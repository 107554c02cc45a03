#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "greater/config.hpp"
#include "greater/serialize.hpp"

namespace greater {

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// Run identity written next to every artifact. Two runs with equal manifests
// are guaranteed to produce byte-identical artifacts; the output location is
// deliberately not part of the identity.
inline ojson make_manifest(const RunConfig& cfg, std::string_view command, std::uint64_t seed) {
  ojson j;
  j["code_version"] = std::string(kCodeVersion);
  j["command"] = std::string(command);
  j["config_hash"] = hex64(cfg.hash());
  j["seed"] = seed;
  return j;
}

}  // namespace greater
