#pragma once

#include <map>
#include <string>

#include "lsi/encoder.hpp" // NamedTensors
#include "lsi/tensor.hpp"

namespace lsi {

/// Binary weight file: magic "LSI1", version, then named f32 arrays.
/// Values pass through f32 on the way out, so save->load->save is
/// byte-identical.
void save_checkpoint(const std::string& path, const NamedTensors& entries);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

/// Copies checkpoint arrays into existing parameter tensors (shapes must
/// match; missing names are errors; unreferenced entries such as metadata
/// are left alone).
void load_into(const std::map<std::string, Tensor>& loaded, const NamedTensors& params);

/// Scalar metadata helpers (stored as meta.<key> rank-1 arrays).
void put_meta(NamedTensors& entries, const std::string& key, double value);
double get_meta(const std::map<std::string, Tensor>& loaded, const std::string& key);
bool has_meta(const std::map<std::string, Tensor>& loaded, const std::string& key);

} // namespace lsi
