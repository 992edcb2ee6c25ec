#include "bimatch/model_io.hpp"

#include <fstream>

#include <json.hpp>

namespace bimatch {

namespace {

constexpr const char* kFormatTag = "bimatch-model";

}  // namespace

void save_model(const std::filesystem::path& path, const SavedModel& model) {
  model.params.validate_shape();
  const Index d = model.params.dim();
  nlohmann::json j;
  j["format"] = kFormatTag;
  j["version"] = kModelFormatVersion;
  j["dim"] = d;
  j["normalization"] = std::string(to_string(model.normalization));
  if (model.vocab_size) j["vocab_size"] = *model.vocab_size;
  std::vector<double> omega;
  omega.reserve(static_cast<std::size_t>(d * d));
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c) omega.push_back(model.params.omega(r, c));
  j["omega"] = omega;
  j["mu"] = std::vector<double>(model.params.mu.data(), model.params.mu.data() + d);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out << j.dump() << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

SavedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormatTag) throw Error(path.string() + ": not a bimatch model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error(path.string() + ": unsupported model format version " + std::to_string(version));
    const Index d = j.at("dim").get<Index>();
    const auto omega = j.at("omega").get<std::vector<double>>();
    const auto mu = j.at("mu").get<std::vector<double>>();
    if (d < 1 || omega.size() != static_cast<std::size_t>(d * d) || mu.size() != static_cast<std::size_t>(d))
      throw Error(path.string() + ": parameter sizes do not match dim " + std::to_string(d));

    SavedModel m;
    m.params.omega.resize(d, d);
    for (Index r = 0; r < d; ++r)
      for (Index c = 0; c < d; ++c) m.params.omega(r, c) = omega[static_cast<std::size_t>(r * d + c)];
    m.params.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), d);
    m.normalization = parse_normalization(j.at("normalization").get<std::string>());
    if (j.contains("vocab_size")) m.vocab_size = j["vocab_size"].get<std::size_t>();
    m.params.validate_shape();
    const double err = m.params.orthogonality_error();
    if (!(err <= kOrthogonalityTolerance))
      throw Error(path.string() + ": omega is not orthogonal (||W^T W - I||_F = " + std::to_string(err) + ")");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace bimatch
