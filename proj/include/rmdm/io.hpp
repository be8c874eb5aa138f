#pragma once

// File formats.
//
// Epoch file: one line of compact JSON (the header) terminated by '\n',
// immediately followed by the payload of n_trials · n_channels · n_samples
// IEEE-754 float32 values, little-endian, trial-major then channel-major
// then sample. Header keys: version, n_trials, n_channels, n_samples,
// fs_hz, channel_names, labels (one per trial, -1 = unlabeled), modality.
//
// Model document: indented JSON holding the feature recipe, class ids,
// per-class counts and the class means as row-major float64 arrays.
// Adaptive state adds a "fusion" object with n_rep, ramp and the
// individual class means.

#include "rmdm/adaptive.hpp"
#include "rmdm/dsp.hpp"
#include "rmdm/mdm.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rmdm {

inline constexpr int kEpochFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

struct EpochSet {
  std::vector<Epoch> epochs;
  std::string modality;
};

/// All epochs must share channel count, sample count, rate and names.
void write_epochs(std::ostream& out, const std::vector<Epoch>& epochs, const std::string& modality = "");
void write_epochs(const std::filesystem::path& path, const std::vector<Epoch>& epochs,
                  const std::string& modality = "");

/// Throws DataError naming the offending field on malformed input.
EpochSet read_epochs(std::istream& in);
EpochSet read_epochs(const std::filesystem::path& path);

std::string model_to_string(const MdmModel& model, const std::optional<Preprocess>& pre = std::nullopt);
void write_model(const std::filesystem::path& path, const MdmModel& model,
                 const std::optional<Preprocess>& pre = std::nullopt);

struct LoadedModel {
  MdmModel model;
  std::optional<Preprocess> preprocess;
};

LoadedModel model_from_string(const std::string& text);
LoadedModel read_model(const std::filesystem::path& path);

std::string fused_to_string(const FusedClassifier& fc);
FusedClassifier fused_from_string(const std::string& text);

/// Write to a sibling temporary file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace rmdm
