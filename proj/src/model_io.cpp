#include "vmreg/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

namespace vmreg {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string hex_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_hex_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw CorruptFile("model file: bad float literal '" + s + "'");
  return v;
}

std::string fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json tensor_to_json(const Tensor& t) {
  json arr = json::array();
  for (double e : t.v) arr.push_back(hex_double(e));
  return json{{"rows", t.rows}, {"cols", t.cols}, {"data", std::move(arr)}};
}

Tensor tensor_from_json(const json& j) {
  Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>());
  const json& arr = j.at("data");
  if (arr.size() != t.size()) throw CorruptFile("model file: tensor extent mismatch");
  for (std::size_t i = 0; i < t.size(); ++i) t.v[i] = parse_hex_double(arr[i].get<std::string>());
  return t;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu:
      return "relu";
    case Activation::kTanh:
      return "tanh";
    case Activation::kIdentity:
      return "identity";
  }
  return "tanh";
}

Activation activation_from(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "identity") return Activation::kIdentity;
  throw CorruptFile("model file: unknown activation '" + s + "'");
}

const char* output_name(OutputMap o) {
  switch (o) {
    case OutputMap::kBiternion:
      return "biternion";
    case OutputMap::kBiternionKappa:
      return "biternion_kappa";
    case OutputMap::kMixture:
      return "mixture";
    case OutputMap::kGaussianParams:
      return "gaussian_params";
  }
  return "biternion";
}

OutputMap output_from(const std::string& s) {
  if (s == "biternion") return OutputMap::kBiternion;
  if (s == "biternion_kappa") return OutputMap::kBiternionKappa;
  if (s == "mixture") return OutputMap::kMixture;
  if (s == "gaussian_params") return OutputMap::kGaussianParams;
  throw CorruptFile("model file: unknown output map '" + s + "'");
}

const char* head_name(HeadKind::Tag t) {
  switch (t) {
    case HeadKind::Tag::kFixedKappa:
      return "fixed";
    case HeadKind::Tag::kSingleVonMises:
      return "vm";
    case HeadKind::Tag::kFiniteMixture:
      return "mixture";
    case HeadKind::Tag::kCvae:
      return "cvae";
    case HeadKind::Tag::kScvae:
      return "scvae";
  }
  return "vm";
}

HeadKind::Tag head_from(const std::string& s) {
  if (s == "fixed") return HeadKind::Tag::kFixedKappa;
  if (s == "vm") return HeadKind::Tag::kSingleVonMises;
  if (s == "mixture") return HeadKind::Tag::kFiniteMixture;
  if (s == "cvae") return HeadKind::Tag::kCvae;
  if (s == "scvae") return HeadKind::Tag::kScvae;
  throw CorruptFile("model file: unknown head '" + s + "'");
}

json spec_to_json(const NetworkSpec& s) {
  json layers = json::array();
  for (const LayerSpec& l : s.hidden) {
    layers.push_back(json{{"width", l.width}, {"act", activation_name(l.act)}});
  }
  return json{{"input_dim", s.input_dim}, {"hidden", std::move(layers)},
              {"output", output_name(s.output)}, {"k", s.mixture_k}, {"latent", s.latent_dim}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  for (const json& l : j.at("hidden")) {
    s.hidden.push_back(LayerSpec{l.at("width").get<int>(), activation_from(l.at("act"))});
  }
  s.output = output_from(j.at("output"));
  s.mixture_k = j.at("k").get<int>();
  s.latent_dim = j.at("latent").get<int>();
  return s;
}

json params_to_json(const ParamSet& p) {
  json arr = json::array();
  for (const Tensor& t : p.values) arr.push_back(tensor_to_json(t));
  return arr;
}

ParamSet params_from_json(const json& j) {
  ParamSet p;
  for (const json& t : j) p.values.push_back(tensor_from_json(t));
  for (const Tensor& t : p.values) p.grads.emplace_back(t.rows, t.cols);
  return p;
}

}  // namespace

namespace {

json model_payload(const TrainedModel& m);
TrainedModel model_from_payload(const json& payload);

void write_file(const json& payload, const std::string& path) {
  json file{{"checksum", fnv1a64(payload.dump())}, {"payload", payload}};
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("save_model: cannot open " + tmp);
    out << file.dump(1) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("save_model: rename failed for " + path);
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  json file;
  try {
    in >> file;
  } catch (const json::exception& e) {
    throw CorruptFile("load_model: " + std::string(e.what()));
  }
  if (!file.contains("payload") || !file.contains("checksum")) {
    throw CorruptFile("load_model: missing payload or checksum");
  }
  json payload = file["payload"];
  if (fnv1a64(payload.dump()) != file["checksum"].get<std::string>()) {
    throw CorruptFile("load_model: checksum mismatch");
  }
  int version = payload.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw UnsupportedVersion("load_model: format_version " + std::to_string(version));
  }
  return payload;
}

}  // namespace

void save_model(const TrainedModel& m, const std::string& path) {
  json payload = model_payload(m);
  payload["format_version"] = kFormatVersion;
  write_file(payload, path);
}

TrainedModel load_model(const std::string& path) {
  json payload = read_file(path);
  if (payload.value("multi", false)) {
    throw ConfigMismatch("load_model: file holds a three-angle bundle, use load_multi_model");
  }
  TrainedModel m = model_from_payload(payload);
  m.format_version = payload.at("format_version").get<int>();
  return m;
}

void save_multi_model(const std::array<TrainedModel, 3>& models, const std::string& path) {
  json arr = json::array();
  for (const TrainedModel& m : models) arr.push_back(model_payload(m));
  json payload{{"format_version", kFormatVersion}, {"multi", true}, {"models", std::move(arr)}};
  write_file(payload, path);
}

std::array<TrainedModel, 3> load_multi_model(const std::string& path) {
  json payload = read_file(path);
  if (!payload.value("multi", false)) {
    throw ConfigMismatch("load_multi_model: file holds a single model, use load_model");
  }
  const json& arr = payload.at("models");
  if (arr.size() != 3) throw CorruptFile("load_multi_model: expected three models");
  std::array<TrainedModel, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = model_from_payload(arr[i]);
    out[i].format_version = payload.at("format_version").get<int>();
  }
  return out;
}

bool model_file_is_multi(const std::string& path) {
  return read_file(path).value("multi", false);
}

namespace {

json model_payload(const TrainedModel& m) {
  json head{{"kind", head_name(m.model.head.tag)},
            {"k", m.model.head.mixture_k},
            {"latent_dim", m.model.head.latent_dim},
            {"s_train", m.model.head.s_train},
            {"s_eval", m.model.head.s_eval}};
  if (m.model.head.fixed_kappa) {
    head["fixed_kappa"] = hex_double(*m.model.head.fixed_kappa);
  } else {
    head["fixed_kappa"] = nullptr;
  }

  json networks;
  if (m.model.head.is_cvae_family()) {
    networks["decoder"] = json{{"spec", spec_to_json(m.model.cvae.decoder)},
                               {"params", params_to_json(m.model.cvae.decoder_params)}};
    if (m.model.head.tag == HeadKind::Tag::kCvae) {
      networks["encoder"] = json{{"spec", spec_to_json(m.model.cvae.encoder)},
                                 {"params", params_to_json(m.model.cvae.encoder_params)}};
      networks["prior"] = json{{"spec", spec_to_json(m.model.cvae.prior)},
                               {"params", params_to_json(m.model.cvae.prior_params)}};
    }
  } else {
    networks["main"] = json{{"spec", spec_to_json(m.model.spec)},
                            {"params", params_to_json(m.model.params)}};
  }

  json history = json::array();
  for (const EpochStats& e : m.history) {
    history.push_back(json{{"train_loss", hex_double(e.train_loss)},
                           {"val_loss", hex_double(e.val_loss)}});
  }

  return json{{"head", std::move(head)},
              {"input_dim", m.model.input_dim},
              {"fitted_kappa", hex_double(m.model.fitted_kappa)},
              {"networks", std::move(networks)},
              {"history", std::move(history)},
              {"best_epoch", m.best_epoch}};
}

TrainedModel model_from_payload(const json& payload) {
  TrainedModel m;
  try {
    const json& head = payload.at("head");
    m.model.head.tag = head_from(head.at("kind"));
    m.model.head.mixture_k = head.at("k").get<int>();
    m.model.head.latent_dim = head.at("latent_dim").get<int>();
    m.model.head.s_train = head.at("s_train").get<int>();
    m.model.head.s_eval = head.at("s_eval").get<int>();
    if (!head.at("fixed_kappa").is_null()) {
      m.model.head.fixed_kappa = parse_hex_double(head.at("fixed_kappa"));
    }
    m.model.input_dim = payload.at("input_dim").get<int>();
    m.model.fitted_kappa = parse_hex_double(payload.at("fitted_kappa"));

    const json& networks = payload.at("networks");
    if (m.model.head.is_cvae_family()) {
      m.model.cvae.decoder = spec_from_json(networks.at("decoder").at("spec"));
      m.model.cvae.decoder_params = params_from_json(networks.at("decoder").at("params"));
      m.model.cvae.latent_dim = m.model.head.latent_dim;
      if (m.model.head.tag == HeadKind::Tag::kCvae) {
        m.model.cvae.encoder = spec_from_json(networks.at("encoder").at("spec"));
        m.model.cvae.encoder_params = params_from_json(networks.at("encoder").at("params"));
        m.model.cvae.prior = spec_from_json(networks.at("prior").at("spec"));
        m.model.cvae.prior_params = params_from_json(networks.at("prior").at("params"));
      }
    } else {
      m.model.spec = spec_from_json(networks.at("main").at("spec"));
      m.model.params = params_from_json(networks.at("main").at("params"));
    }

    for (const json& e : payload.at("history")) {
      m.history.push_back(EpochStats{parse_hex_double(e.at("train_loss")),
                                     parse_hex_double(e.at("val_loss"))});
    }
    m.best_epoch = payload.at("best_epoch").get<int>();
  } catch (const json::exception& e) {
    throw CorruptFile("load_model: malformed payload: " + std::string(e.what()));
  }
  return m;
}

}  // namespace

}  // namespace vmreg
