#include "xltrack/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "xltrack/errors.hpp"

namespace xltrack::nn {

namespace {
constexpr const char* kMagic = "xltrack-checkpoint-v1";

void append_f64_le(std::string& buf, double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double read_f64_le(const char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) {
    u |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<double>(u);
}
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointEntry>& entries) {
  std::ostringstream head;
  head << kMagic << "\n" << entries.size() << "\n";
  for (const auto& e : entries) {
    if (e.name.empty() ||
        e.name.find_first_of(" \t\n\r") != std::string::npos) {
      throw IoError("save_checkpoint: invalid entry name '" + e.name + "'");
    }
    head << e.name << " " << e.tensor.ndim();
    for (const int d : e.tensor.shape) head << " " << d;
    head << "\n";
  }

  std::string payload;
  std::size_t total = 0;
  for (const auto& e : entries) total += e.tensor.data.size();
  payload.reserve(total * 8);
  for (const auto& e : entries) {
    for (const double v : e.tensor.data) append_f64_le(payload, v);
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_checkpoint: cannot open '" + path + "' for writing");
  const std::string h = head.str();
  f.write(h.data(), static_cast<std::streamsize>(h.size()));
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw IoError("save_checkpoint: short write to '" + path + "'");
}

std::map<std::string, Tensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_checkpoint: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(f, line) || line != kMagic) {
    throw IoError("load_checkpoint: '" + path + "' is not a checkpoint file");
  }
  if (!std::getline(f, line)) throw IoError("load_checkpoint: truncated header");
  const std::size_t n = std::stoull(line);

  std::vector<std::pair<std::string, std::vector<int>>> manifest;
  manifest.reserve(n);
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(f, line)) throw IoError("load_checkpoint: truncated header");
    std::istringstream ss(line);
    std::string name;
    int ndim = 0;
    if (!(ss >> name >> ndim) || ndim < 0) {
      throw IoError("load_checkpoint: malformed manifest line '" + line + "'");
    }
    std::vector<int> shape(ndim);
    for (int d = 0; d < ndim; ++d) {
      if (!(ss >> shape[d])) {
        throw IoError("load_checkpoint: malformed manifest line '" + line + "'");
      }
    }
    total += static_cast<std::size_t>(shape_size(shape));
    manifest.emplace_back(std::move(name), std::move(shape));
  }

  std::string payload((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
  if (payload.size() != total * 8) {
    throw IoError("load_checkpoint: payload holds " +
                  std::to_string(payload.size()) + " bytes, manifest implies " +
                  std::to_string(total * 8));
  }

  std::map<std::string, Tensor> out;
  const char* cur = payload.data();
  for (auto& [name, shape] : manifest) {
    Tensor t(shape);
    for (auto& v : t.data) {
      v = read_f64_le(cur);
      cur += 8;
    }
    if (!out.emplace(name, std::move(t)).second) {
      throw IoError("load_checkpoint: duplicate entry '" + name + "'");
    }
  }
  return out;
}

void append_params(std::vector<CheckpointEntry>& out,
                   const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    out.push_back({p->name(), p->value()});
  }
}

void restore_params(const std::map<std::string, Tensor>& entries,
                    const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const auto it = entries.find(p->name());
    if (it == entries.end()) {
      throw IoError("restore_params: checkpoint is missing '" + p->name() + "'");
    }
    if (it->second.shape != p->value().shape) {
      throw IoError("restore_params: '" + p->name() + "' has shape " +
                    shape_str(it->second.shape) + ", model wants " +
                    shape_str(p->value().shape));
    }
    p->value() = it->second;
  }
}

}  // namespace xltrack::nn
