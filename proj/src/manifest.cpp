// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "facetsim/manifest.hpp"

#include <array>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <openssl/evp.h>

#include "facetsim/errors.hpp"

namespace facetsim {

std::string version() { return FACETSIM_VERSION; }

std::string sha256_bytes(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return sha256_bytes({std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()});
}

void RunManifest::add_input(const std::filesystem::path& path) { inputs[path.string()] = sha256_file(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs[path.string()] = sha256_file(path); }

void RunManifest::write(const std::filesystem::path& output) const {
  nlohmann::json j = {{"command", command},
                      {"tool_version", version()},
                      {"seed", seed},
                      {"config", nlohmann::json::parse(config.empty() ? "{}" : config)},
                      {"inputs", inputs},
                      {"outputs", outputs},
                      {"timings_ms", timings_ms}};
  const auto path = output.string() + ".manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest " + path);
  out << j.dump(2) << '\n';
}

}  // namespace facetsim
