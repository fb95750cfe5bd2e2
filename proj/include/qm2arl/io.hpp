#pragma once

#include <string>
#include <vector>

#include "qm2arl/qnn.hpp"
#include "qm2arl/train.hpp"

namespace qm2arl::io {

// Full-round-trip decimal rendering of a double (17 significant digits).
std::string format_double(double value);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file. Throws std::runtime_error on I/O failure.
void atomic_write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);  // missing file -> runtime_error
bool file_exists(const std::string& path);

// CSV assembly: header + rows, LF line endings, no trailing comma handling.
std::string csv_text(const std::string& header, const std::vector<std::vector<std::string>>& rows);

// ---------------------------------------------------------------------------
// Pole-memory file: JSON document {format_version, entries:[{label,
// agent_poles, variant, epoch, alpha_degrees}]}, numbers at 17 significant
// digits so vectors round-trip bit-exactly.
// ---------------------------------------------------------------------------

std::string pole_memory_to_text(const train::PoleMemoryStore& store);
train::PoleMemoryStore pole_memory_from_text(const std::string& text);  // malformed -> runtime_error

void write_pole_memory(const std::string& path, const train::PoleMemoryStore& store);
train::PoleMemoryStore read_pole_memory(const std::string& path);

// ---------------------------------------------------------------------------
// Trained-angle model file (JSON): circuit shape, action map, and the angle
// vector, with optional run metadata.
// ---------------------------------------------------------------------------

struct ModelFile {
    qnn::QnnConfig config;
    qnn::AngleParams phi;
    std::string env_label;
    std::uint64_t seed = 0;
    double alpha_degrees = 0.0;
    int epochs = 0;
};

std::string model_to_text(const ModelFile& model);
ModelFile model_from_text(const std::string& text);  // malformed -> runtime_error

void write_model(const std::string& path, const ModelFile& model);
ModelFile read_model(const std::string& path);

}  // namespace qm2arl::io
