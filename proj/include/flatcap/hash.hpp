#ifndef FLATCAP_HASH_HPP
#define FLATCAP_HASH_HPP

/// SHA-256 digests for run manifests (requires linking OpenSSL::Crypto).

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "flatcap/errors.hpp"
#include "flatcap/io.hpp"

namespace flatcap::io {

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw SolverError("sha256: digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace flatcap::io

#endif  // FLATCAP_HASH_HPP
