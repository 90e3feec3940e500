#pragma once

#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fraudgnn/nn.hpp"

namespace fraudgnn {

// Checkpoint layout (little-endian, version 1):
//   magic   "FGNNCKPT"
//   u32     format version
//   u32     config echo length, followed by that many bytes
//   u32     tensor count
//   per tensor: u32 name length, name bytes, u64 rows, u64 cols,
//               rows*cols IEEE-754 doubles (raw)
namespace ckpt_detail {

constexpr char kMagic[8] = {'F', 'G', 'N', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorCategory::Io, "truncated checkpoint " + path);
  return v;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const std::vector<ParamRef>& params,
                            const std::string& config_echo) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::Io, "cannot write " + path);
  out.write(ckpt_detail::kMagic, 8);
  ckpt_detail::write_pod(out, ckpt_detail::kVersion);
  ckpt_detail::write_pod(out, static_cast<std::uint32_t>(config_echo.size()));
  out.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
  ckpt_detail::write_pod(out, static_cast<std::uint32_t>(params.size()));
  for (const ParamRef& p : params) {
    ckpt_detail::write_pod(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    ckpt_detail::write_pod(out, static_cast<std::uint64_t>(p.tensor->rows()));
    ckpt_detail::write_pod(out, static_cast<std::uint64_t>(p.tensor->cols()));
    out.write(reinterpret_cast<const char*>(p.tensor->data().data()),
              static_cast<std::streamsize>(p.tensor->size() * sizeof(double)));
  }
  require(static_cast<bool>(out), ErrorCategory::Io, "write failed for " + path);
}

struct Checkpoint {
  std::string config_echo;
  std::map<std::string, Tensor> tensors;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::Io, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(static_cast<bool>(in) && std::memcmp(magic, ckpt_detail::kMagic, 8) == 0,
          ErrorCategory::Validation, path + ": not a fraudgnn checkpoint");
  const auto version = ckpt_detail::read_pod<std::uint32_t>(in, path);
  require(version == ckpt_detail::kVersion, ErrorCategory::Validation,
          path + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  const auto echo_len = ckpt_detail::read_pod<std::uint32_t>(in, path);
  ckpt.config_echo.resize(echo_len);
  in.read(ckpt.config_echo.data(), echo_len);
  const auto count = ckpt_detail::read_pod<std::uint32_t>(in, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = ckpt_detail::read_pod<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = ckpt_detail::read_pod<std::uint64_t>(in, path);
    const auto cols = ckpt_detail::read_pod<std::uint64_t>(in, path);
    Tensor t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data().data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    require(static_cast<bool>(in), ErrorCategory::Io, "truncated checkpoint " + path);
    ckpt.tensors.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

// Copies checkpoint tensors into matching parameters. `allow_missing` leaves
// parameters absent from the checkpoint untouched (e.g. edge projections when
// restoring an edge-aware model from a pre-training checkpoint).
inline void restore_params(const Checkpoint& ckpt, const std::vector<ParamRef>& params,
                           bool allow_missing = false) {
  for (const ParamRef& p : params) {
    auto it = ckpt.tensors.find(p.name);
    if (it == ckpt.tensors.end()) {
      require(allow_missing, ErrorCategory::Validation,
              "checkpoint missing parameter " + p.name);
      continue;
    }
    require(it->second.rows() == p.tensor->rows() && it->second.cols() == p.tensor->cols(),
            ErrorCategory::Validation, "checkpoint shape mismatch for " + p.name);
    *p.tensor = it->second;
  }
}

}  // namespace fraudgnn
