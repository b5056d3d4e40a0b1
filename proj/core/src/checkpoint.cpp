#include "trackpose/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "trackpose/error.hpp"

namespace trackpose::learn {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'T', 'P', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void write_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(const char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json header_of(const Checkpoint& c) {
  json arch;
  if (c.kind == ModelKind::Mlp) {
    arch = {{"hidden", c.mlp.hidden}};
  } else {
    arch = {{"layers", c.lstm.layers}, {"hidden", c.lstm.hidden}, {"window", c.lstm.window}};
  }
  return {
      {"format", "trackpose-checkpoint"},
      {"version", 1},
      {"model_kind", std::string(to_string(c.kind))},
      {"architecture", arch},
      {"window", c.window()},
      {"groups", std::string(to_string(c.groups))},
      {"schema", json::parse(c.standardizer.input_schema.to_json())},
      {"standardizer",
       {{"kept", c.standardizer.kept}, {"mean", to_json(c.standardizer.mean)}, {"std", to_json(c.standardizer.stddev)}}},
      {"val_loss", c.val_loss},
      {"best_epoch", c.best_epoch},
      {"seed", c.seed},
  };
}

Checkpoint from_header(const json& h) {
  if (h.value("format", "") != "trackpose-checkpoint") fail(ErrorCode::Io, "not a trackpose checkpoint");
  Checkpoint c;
  c.kind = parse_model_kind(h.at("model_kind").get<std::string>());
  const json& arch = h.at("architecture");
  if (c.kind == ModelKind::Mlp) {
    c.mlp.hidden = arch.at("hidden").get<std::vector<std::size_t>>();
  } else {
    c.lstm.layers = arch.at("layers").get<std::size_t>();
    c.lstm.hidden = arch.at("hidden").get<std::size_t>();
    c.lstm.window = arch.at("window").get<std::size_t>();
  }
  c.groups = parse_group_set(h.at("groups").get<std::string>());
  Standardizer& s = c.standardizer;
  s.input_schema = FeatureSchema::from_json(h.at("schema").dump());
  const json& sj = h.at("standardizer");
  s.kept = sj.at("kept").get<std::vector<std::size_t>>();
  s.mean = vector_from(sj.at("mean"));
  s.stddev = vector_from(sj.at("std"));
  std::vector<ChannelSpec> kept;
  for (std::size_t i : s.kept) {
    if (i >= s.input_schema.size()) fail(ErrorCode::Io, "standardizer index out of range");
    kept.push_back(s.input_schema[i]);
  }
  s.schema = FeatureSchema(std::move(kept));
  if (s.mean.size() != static_cast<Eigen::Index>(s.kept.size()) || s.stddev.size() != s.mean.size()) {
    fail(ErrorCode::Io, "standardizer statistics do not match the kept channels");
  }
  c.val_loss = h.at("val_loss").get<double>();
  c.best_epoch = h.value("best_epoch", 0);
  c.seed = h.at("seed").get<std::uint64_t>();
  c.model = make_model(c.kind, s.schema.size(), c.mlp, c.lstm, 0);
  for (auto& p : c.model->parameters()) p.value.setZero();
  return c;
}

Parameter& find_param(VelocityModel& model, const std::string& name) {
  for (auto& p : model.parameters()) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::Io, "checkpoint tensor '" + name + "' does not belong to the model");
}

void check_shape(const Parameter& p, const json& shape) {
  const auto dims = shape.get<std::vector<Eigen::Index>>();
  if (dims.size() != 2 || dims[0] != p.value.rows() || dims[1] != p.value.cols()) {
    fail(ErrorCode::Io, "checkpoint tensor '" + p.name + "' has the wrong shape");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::unique_ptr<VelocityModel> make_model(ModelKind kind, std::size_t input_width, const MlpConfig& mlp,
                                          const LstmConfig& lstm, std::uint64_t seed) {
  if (kind == ModelKind::Mlp) return std::make_unique<Mlp>(input_width, mlp, seed);
  return std::make_unique<Lstm>(input_width, lstm, seed);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, CheckpointEncoding encoding) {
  if (!ckpt.model) fail(ErrorCode::ModelNotTrained, "checkpoint has no model");
  json header = header_of(ckpt);
  std::string out;

  if (encoding == CheckpointEncoding::Json) {
    json tensors = json::array();
    for (const auto& p : ckpt.model->parameters()) {
      std::vector<double> data;
      data.reserve(static_cast<std::size_t>(p.value.size()));
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) data.push_back(p.value(r, c));
      }
      tensors.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"data", data}});
    }
    header["tensors"] = tensors;
    out = header.dump(1) + "\n";
  } else {
    json tensors = json::array();
    std::string blob;
    for (const auto& p : ckpt.model->parameters()) {
      tensors.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", blob.size()}});
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.value.cols(); ++c) write_le(blob, p.value(r, c));
      }
    }
    header["tensors"] = tensors;
    const std::string text = header.dump();
    out.append(kMagic, sizeof(kMagic));
    write_le<std::uint64_t>(out, text.size());
    out += text;
    out += blob;
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorCode::Io, "cannot write checkpoint " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) fail(ErrorCode::Io, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    if (bytes.size() >= sizeof(kMagic) && std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0) {
      if (bytes.size() < 16) fail(ErrorCode::Io, "truncated checkpoint " + path.string());
      const auto header_len = read_le<std::uint64_t>(bytes.data() + 8);
      if (16 + header_len > bytes.size()) fail(ErrorCode::Io, "truncated checkpoint header " + path.string());
      const json header = json::parse(bytes.substr(16, header_len));
      Checkpoint c = from_header(header);
      const char* blob = bytes.data() + 16 + header_len;
      const std::size_t blob_size = bytes.size() - 16 - header_len;
      std::size_t seen = 0;
      for (const auto& t : header.at("tensors")) {
        Parameter& p = find_param(*c.model, t.at("name").get<std::string>());
        check_shape(p, t.at("shape"));
        const auto offset = t.at("offset").get<std::size_t>();
        if (offset + sizeof(double) * static_cast<std::size_t>(p.value.size()) > blob_size) {
          fail(ErrorCode::Io, "tensor '" + p.name + "' runs past the end of " + path.string());
        }
        const char* at = blob + offset;
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
          for (Eigen::Index col = 0; col < p.value.cols(); ++col, at += sizeof(double)) {
            p.value(r, col) = read_le<double>(at);
          }
        }
        ++seen;
      }
      if (seen != c.model->parameters().size()) fail(ErrorCode::Io, "checkpoint is missing tensors");
      return c;
    }

    const json doc = json::parse(bytes);
    Checkpoint c = from_header(doc);
    std::size_t seen = 0;
    for (const auto& t : doc.at("tensors")) {
      Parameter& p = find_param(*c.model, t.at("name").get<std::string>());
      check_shape(p, t.at("shape"));
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != static_cast<std::size_t>(p.value.size())) fail(ErrorCode::Io, "tensor size mismatch");
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        for (Eigen::Index col = 0; col < p.value.cols(); ++col) p.value(r, col) = data[k++];
      }
      ++seen;
    }
    if (seen != c.model->parameters().size()) fail(ErrorCode::Io, "checkpoint is missing tensors");
    return c;
  } catch (const json::exception& e) {
    fail(ErrorCode::Io, "malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace trackpose::learn
