#pragma once

#include <map>
#include <string>
#include <vector>

#include "xltrack/autograd.hpp"

namespace xltrack::nn {

struct CheckpointEntry {
  std::string name;
  Tensor tensor;
};

// Single-file checkpoint: a plain-text manifest (entry names and shapes)
// followed by the concatenated little-endian 64-bit float payload. Writing the
// same entries always produces identical bytes, on any platform.
void save_checkpoint(const std::string& path,
                     const std::vector<CheckpointEntry>& entries);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

// Convenience bridges between parameter lists and checkpoints.
void append_params(std::vector<CheckpointEntry>& out,
                   const std::vector<Parameter*>& params);

// Strict restore: every parameter must be present with a matching shape.
void restore_params(const std::map<std::string, Tensor>& entries,
                    const std::vector<Parameter*>& params);

}  // namespace xltrack::nn
