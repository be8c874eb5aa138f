#include "rmdm/io.hpp"

#include "rmdm/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace rmdm {

using nlohmann::json;

namespace {

void put_f32_le(std::string& buf, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

template <typename T>
T field(const json& j, const char* name, const char* where) {
  if (!j.contains(name)) throw DataError(std::string(where) + ": missing field '" + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string(where) + ": field '" + name + "' has the wrong type");
  }
}

json matrix_json(const Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) v.push_back(m(i, k));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", v}};
}

Matrix matrix_from_json(const json& j, const char* where) {
  const auto rows = field<Eigen::Index>(j, "rows", where);
  const auto cols = field<Eigen::Index>(j, "cols", where);
  const auto v = field<std::vector<double>>(j, "values", where);
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != v.size()) {
    throw DataError(std::string(where) + ": field 'values' does not hold rows x cols entries");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = v[static_cast<std::size_t>(i * cols + k)];
  }
  return m;
}

json shrinkage_json(const Shrinkage& s) {
  if (const auto* g = std::get_if<double>(&s)) return *g;
  return "auto";
}

Shrinkage shrinkage_from_json(const json& j) {
  if (j.is_string() && j.get<std::string>() == "auto") return AutoShrinkage{};
  if (j.is_number()) return j.get<double>();
  throw DataError("model recipe: field 'shrinkage' must be \"auto\" or a number");
}

json recipe_json(const FeatureRecipe& r) {
  json protos = json::array();
  for (const auto& p : r.prototypes) {
    json pj = matrix_json(p.mean);
    pj["class_id"] = p.class_id;
    pj["count"] = p.count;
    protos.push_back(std::move(pj));
  }
  return json{{"modality", to_string(r.modality)},
              {"shrinkage", shrinkage_json(r.shrinkage)},
              {"prototypes", protos},
              {"target_class", r.target_class},
              {"nontarget_class", r.nontarget_class},
              {"freqs", r.freqs},
              {"width_hz", r.width_hz},
              {"order", r.order},
              {"n_subjects", r.n_subjects}};
}

FeatureRecipe recipe_from_json(const json& j) {
  constexpr const char* where = "model recipe";
  FeatureRecipe r;
  try {
    r.modality = parse_modality(field<std::string>(j, "modality", where));
  } catch (const ContractError& e) {
    throw DataError(std::string(where) + ": field 'modality': " + e.what());
  }
  if (!j.contains("shrinkage")) throw DataError("model recipe: missing field 'shrinkage'");
  r.shrinkage = shrinkage_from_json(j.at("shrinkage"));
  for (const auto& pj : field<json>(j, "prototypes", where)) {
    Prototype p;
    p.class_id = field<int>(pj, "class_id", "model prototype");
    p.count = field<int>(pj, "count", "model prototype");
    p.mean = matrix_from_json(pj, "model prototype");
    r.prototypes.push_back(std::move(p));
  }
  r.target_class = field<int>(j, "target_class", where);
  r.nontarget_class = field<int>(j, "nontarget_class", where);
  r.freqs = field<std::vector<double>>(j, "freqs", where);
  r.width_hz = field<double>(j, "width_hz", where);
  r.order = field<int>(j, "order", where);
  r.n_subjects = field<int>(j, "n_subjects", where);
  try {
    validate(r);
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return r;
}

json preprocess_json(const Preprocess& p) {
  json j = json::object();
  if (p.band) {
    j["band"] = {{"low_hz", p.band->low_hz},
                 {"high_hz", p.band->high_hz},
                 {"order", p.band->order},
                 {"zero_phase", p.band->phase == FilterPhase::ZeroPhase}};
  }
  if (p.decimate_to) j["decimate_to"] = *p.decimate_to;
  return j;
}

Preprocess preprocess_from_json(const json& j) {
  Preprocess p;
  if (j.contains("band")) {
    const json& b = j.at("band");
    p.band = BandSpec{field<double>(b, "low_hz", "preprocess band"), field<double>(b, "high_hz", "preprocess band"),
                      field<int>(b, "order", "preprocess band"),
                      field<bool>(b, "zero_phase", "preprocess band") ? FilterPhase::ZeroPhase : FilterPhase::Causal};
  }
  if (j.contains("decimate_to")) p.decimate_to = field<double>(j, "decimate_to", "preprocess");
  return p;
}

json model_json(const MdmModel& m) {
  json means = json::array();
  for (const auto& mean : m.means) means.push_back(matrix_json(mean.values()));
  return json{{"format", "rmdm-model"},
              {"version", kModelFormatVersion},
              {"recipe", recipe_json(m.recipe)},
              {"class_ids", m.class_ids},
              {"counts", m.counts},
              {"means", means}};
}

SpdMatrix spd_from_json(const json& j, const char* where) {
  try {
    return SpdMatrix(matrix_from_json(j, where));
  } catch (const NumericError& e) {
    throw DataError(std::string(where) + ": " + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string(where) + ": " + e.what());
  }
}

MdmModel model_from_json(const json& j) {
  constexpr const char* where = "model";
  if (field<std::string>(j, "format", where) != "rmdm-model") throw DataError("model: field 'format' is not rmdm-model");
  if (field<int>(j, "version", where) != kModelFormatVersion) throw DataError("model: unsupported field 'version'");
  MdmModel m;
  m.recipe = recipe_from_json(field<json>(j, "recipe", where));
  m.class_ids = field<std::vector<int>>(j, "class_ids", where);
  m.counts = field<std::vector<int>>(j, "counts", where);
  for (const auto& mj : field<json>(j, "means", where)) m.means.push_back(spd_from_json(mj, "model mean"));
  try {
    validate(m);
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return m;
}

json parse_json(const std::string& text, const char* where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string(where) + ": not valid JSON (" + e.what() + ")");
  }
}

}  // namespace

void write_epochs(std::ostream& out, const std::vector<Epoch>& epochs, const std::string& modality) {
  int n = 0;
  int t = 0;
  double fs = 0.0;
  std::vector<std::string> names;
  if (!epochs.empty()) {
    const Epoch& first = epochs.front();
    validate(first);
    n = first.n_channels();
    t = first.n_samples();
    fs = first.fs;
    names = first.channels;
  }
  std::vector<int> labels;
  for (const auto& e : epochs) {
    if (e.n_channels() != n || e.n_samples() != t || e.fs != fs || e.channels != names) {
      throw ContractError("write_epochs: all epochs must share shape, sampling rate and channel names");
    }
    labels.push_back(e.label.value_or(-1));
  }
  const json header{{"version", kEpochFormatVersion}, {"n_trials", epochs.size()}, {"n_channels", n},
                    {"n_samples", t},                  {"fs_hz", fs},               {"channel_names", names},
                    {"labels", labels},                {"modality", modality}};
  std::string buf = header.dump();
  buf.push_back('\n');
  buf.reserve(buf.size() + epochs.size() * static_cast<std::size_t>(n) * static_cast<std::size_t>(t) * 4);
  for (const auto& e : epochs) {
    for (int c = 0; c < n; ++c) {
      for (int s = 0; s < t; ++s) put_f32_le(buf, static_cast<float>(e.data(c, s)));
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("write_epochs: write failed");
}

void write_epochs(const std::filesystem::path& path, const std::vector<Epoch>& epochs, const std::string& modality) {
  std::ostringstream ss;
  write_epochs(ss, epochs, modality);
  write_file_atomic(path, ss.str());
}

EpochSet read_epochs(std::istream& in) {
  constexpr const char* where = "epoch file header";
  std::string line;
  if (!std::getline(in, line)) throw DataError("epoch file: missing header line");
  const json header = parse_json(line, where);
  if (!header.is_object()) throw DataError("epoch file: header is not a JSON object");
  if (field<int>(header, "version", where) != kEpochFormatVersion) {
    throw DataError("epoch file header: unsupported field 'version'");
  }
  const auto n_trials = field<long long>(header, "n_trials", where);
  const auto n = field<long long>(header, "n_channels", where);
  const auto t = field<long long>(header, "n_samples", where);
  const auto fs = field<double>(header, "fs_hz", where);
  const auto names = field<std::vector<std::string>>(header, "channel_names", where);
  const auto labels = field<std::vector<int>>(header, "labels", where);
  EpochSet set;
  set.modality = field<std::string>(header, "modality", where);

  if (n_trials < 0) throw DataError("epoch file header: field 'n_trials' is negative");
  if (n < 0 || t < 0) throw DataError("epoch file header: field 'n_channels'/'n_samples' is negative");
  if (static_cast<long long>(labels.size()) != n_trials) {
    throw DataError("epoch file header: field 'labels' has " + std::to_string(labels.size()) +
                    " entries but n_trials is " + std::to_string(n_trials));
  }
  if (!names.empty() && static_cast<long long>(names.size()) != n) {
    throw DataError("epoch file header: field 'channel_names' does not match n_channels");
  }
  if (n_trials > 0 && (n < 1 || t < 2 || !(fs > 0.0))) {
    throw DataError("epoch file header: fields 'n_channels', 'n_samples', 'fs_hz' describe an empty epoch");
  }

  const std::string payload{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  const auto expected = static_cast<unsigned long long>(n_trials) * static_cast<unsigned long long>(n) *
                        static_cast<unsigned long long>(t) * 4ULL;
  if (payload.size() < expected) {
    throw DataError("epoch file: payload truncated, n_trials=" + std::to_string(n_trials) + " requires " +
                    std::to_string(expected) + " bytes but only " + std::to_string(payload.size()) + " present");
  }
  if (payload.size() > expected) {
    throw DataError("epoch file: payload has " + std::to_string(payload.size() - expected) +
                    " trailing bytes beyond n_trials=" + std::to_string(n_trials));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  set.epochs.reserve(static_cast<std::size_t>(n_trials));
  for (long long k = 0; k < n_trials; ++k) {
    Epoch e;
    e.data.resize(n, t);
    for (long long c = 0; c < n; ++c) {
      for (long long s = 0; s < t; ++s, p += 4) e.data(c, s) = get_f32_le(p);
    }
    e.fs = fs;
    e.channels = names;
    if (labels[static_cast<std::size_t>(k)] != -1) e.label = labels[static_cast<std::size_t>(k)];
    set.epochs.push_back(std::move(e));
  }
  return set;
}

EpochSet read_epochs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open epoch file " + path.string());
  return read_epochs(in);
}

std::string model_to_string(const MdmModel& model, const std::optional<Preprocess>& pre) {
  json j = model_json(model);
  if (pre) j["preprocess"] = preprocess_json(*pre);
  return j.dump(2) + "\n";
}

void write_model(const std::filesystem::path& path, const MdmModel& model, const std::optional<Preprocess>& pre) {
  write_file_atomic(path, model_to_string(model, pre));
}

LoadedModel model_from_string(const std::string& text) {
  const json j = parse_json(text, "model");
  LoadedModel out{model_from_json(j), std::nullopt};
  if (j.contains("preprocess")) out.preprocess = preprocess_from_json(j.at("preprocess"));
  return out;
}

LoadedModel read_model(const std::filesystem::path& path) { return model_from_string(read_file(path)); }

std::string fused_to_string(const FusedClassifier& fc) {
  json j = model_json(fc.generic());
  json individual = json::array();
  for (const auto& [z, st] : fc.individual_state()) {
    json ij = matrix_json(st.mean.values());
    ij["class_id"] = z;
    ij["count"] = st.count;
    individual.push_back(std::move(ij));
  }
  j["fusion"] = {{"n_rep", fc.n_rep()}, {"ramp", fc.ramp()}, {"individual", individual}};
  return j.dump(2) + "\n";
}

FusedClassifier fused_from_string(const std::string& text) {
  const json j = parse_json(text, "fused state");
  const json fusion = field<json>(j, "fusion", "fused state");
  FusionConfig cfg;
  cfg.ramp = field<int>(fusion, "ramp", "fused state");
  try {
    FusedClassifier fc(model_from_json(j), cfg);
    std::map<int, FusedClassifier::ClassState> classes;
    for (const auto& ij : field<json>(fusion, "individual", "fused state")) {
      const int z = field<int>(ij, "class_id", "fused individual mean");
      classes.emplace(z, FusedClassifier::ClassState{spd_from_json(ij, "fused individual mean"),
                                                     field<int>(ij, "count", "fused individual mean"),
                                                     {}});
    }
    fc.restore(field<int>(fusion, "n_rep", "fused state"), std::move(classes));
    return fc;
  } catch (const ContractError& e) {
    throw DataError(std::string("fused state: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace rmdm
