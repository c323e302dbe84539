#include "ordinal/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

namespace ordinal {

const char* const kFoldReportVersion = "# ordinal fold-report v1";
const char* const kBoundReportVersion = "# ordinal bound-report v1";
const char* const kPredictionReportVersion = "# ordinal prediction-report v1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---- config parsing ---------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

struct Entry {
  std::vector<std::string> values;
  bool is_list = false;
  std::size_t line = 0;
};

[[noreturn]] void bad_value(const std::string& key, const Entry& e, const std::string& why) {
  throw ConfigError("config key '" + key + "' (line " + std::to_string(e.line) + "): " + why);
}

const std::string& scalar(const std::string& key, const Entry& e) {
  if (e.is_list || e.values.size() != 1) bad_value(key, e, "expected a single value");
  return e.values.front();
}

double as_double(const std::string& key, const Entry& e, const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    bad_value(key, e, "'" + s + "' is not a number");
  return v;
}

long long as_int(const std::string& key, const Entry& e, const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    bad_value(key, e, "'" + s + "' is not an integer");
  return v;
}

std::size_t as_count(const std::string& key, const Entry& e, const std::string& s) {
  const long long v = as_int(key, e, s);
  if (v < 0) bad_value(key, e, "must be non-negative");
  return static_cast<std::size_t>(v);
}

bool as_bool(const std::string& key, const Entry& e, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  bad_value(key, e, "expected true or false");
}

template <typename T, typename F>
std::vector<T> as_list(const std::string& key, const Entry& e, F convert) {
  std::vector<T> out;
  for (const auto& s : e.values) out.push_back(convert(key, e, s));
  if (out.empty()) bad_value(key, e, "list is empty");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const Entry&,
                                  const std::filesystem::path&)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename E, typename F>
E enum_value(const std::string& key, const Entry& e, const std::string& s, F parse) {
  try {
    return parse(s);
  } catch (const Error& err) {
    bad_value(key, e, err.what());
  }
}

const std::map<std::string, Setter>& setters() {
  using P = std::filesystem::path;
  static const std::map<std::string, Setter> table = {
      {"dataset", [](RunConfig& c, const std::string& k, const Entry& e, const P& b) { c.dataset = resolve(b, scalar(k, e)); }},
      {"bins", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bins = static_cast<int>(as_int(k, e, scalar(k, e))); }},
      {"binning", [](RunConfig& c, const std::string& k, const Entry& e, const P&) {
         c.binning = enum_value<Discretizer::Strategy>(k, e, scalar(k, e), binning_from_string);
       }},
      {"algorithm", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.algorithm = scalar(k, e); }},
      {"normalization", [](RunConfig& c, const std::string& k, const Entry& e, const P&) {
         c.normalization = as_list<Normalizer::Strategy>(k, e, [](const std::string& kk, const Entry& ee, const std::string& s) {
           return enum_value<Normalizer::Strategy>(kk, ee, s, normalization_from_string);
         });
       }},
      {"epochs", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.epochs = as_list<std::size_t>(k, e, as_count); }},
      {"margin_scale", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.margin_scale = as_list<double>(k, e, as_double); }},
      {"shrinkage", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.shrinkage = as_list<double>(k, e, as_double); }},
      {"delta", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.delta = as_double(k, e, scalar(k, e)); }},
      {"kernel", [](RunConfig& c, const std::string& k, const Entry& e, const P&) {
         const auto& s = scalar(k, e);
         if (s == "linear") c.kernel.kind = Kernel::Kind::linear;
         else if (s == "polynomial") c.kernel.kind = Kernel::Kind::polynomial;
         else if (s == "rbf") c.kernel.kind = Kernel::Kind::rbf;
         else bad_value(k, e, "unknown kernel '" + s + "'");
       }},
      {"kernel_degree", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.kernel.degree = static_cast<int>(as_int(k, e, scalar(k, e))); }},
      {"kernel_coef0", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.kernel.coef0 = as_double(k, e, scalar(k, e)); }},
      {"kernel_gamma", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.kernel.gamma = as_double(k, e, scalar(k, e)); }},
      {"averaging", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.averaging = as_bool(k, e, scalar(k, e)); }},
      {"shuffle", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.shuffle = as_bool(k, e, scalar(k, e)); }},
      {"features", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.features = as_bool(k, e, scalar(k, e)); }},
      {"hidden", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.mlp.hidden = as_count(k, e, scalar(k, e)); }},
      {"learning_rate", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.mlp.learning_rate = as_double(k, e, scalar(k, e)); }},
      {"patience", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.mlp.patience = as_count(k, e, scalar(k, e)); }},
      {"feature_max_epochs", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.mlp.max_epochs = as_count(k, e, scalar(k, e)); }},
      {"activation", [](RunConfig& c, const std::string& k, const Entry& e, const P&) {
         c.mlp.activation = enum_value<Activation>(k, e, scalar(k, e), activation_from_string);
       }},
      {"batch_size", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.mlp.batch_size = as_count(k, e, scalar(k, e)); }},
      {"validation_fraction", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.validation_fraction = as_double(k, e, scalar(k, e)); }},
      {"seed", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.seed = as_count(k, e, scalar(k, e)); }},
      {"partitions", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.partitions = as_count(k, e, scalar(k, e)); }},
      {"train_fraction", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.train_fraction = as_double(k, e, scalar(k, e)); }},
      {"train_size", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.train_size = as_count(k, e, scalar(k, e)); }},
      {"partition_file", [](RunConfig& c, const std::string& k, const Entry& e, const P& b) { c.partition_file = resolve(b, scalar(k, e)); }},
      {"folds", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.folds = as_list<std::size_t>(k, e, as_count); }},
      {"threads", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.threads = as_count(k, e, scalar(k, e)); }},
      {"model", [](RunConfig& c, const std::string& k, const Entry& e, const P& b) { c.model_path = resolve(b, scalar(k, e)); }},
      {"report", [](RunConfig& c, const std::string& k, const Entry& e, const P& b) { c.report_path = resolve(b, scalar(k, e)); }},
      {"bound_seeds", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_seeds = as_count(k, e, scalar(k, e)); }},
      {"bound_first_seed", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_first_seed = as_count(k, e, scalar(k, e)); }},
      {"bound_n", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_n = as_count(k, e, scalar(k, e)); }},
      {"bound_d", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_d = as_count(k, e, scalar(k, e)); }},
      {"bound_r", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_r = static_cast<int>(as_int(k, e, scalar(k, e))); }},
      {"bound_radius", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_radius = as_double(k, e, scalar(k, e)); }},
      {"bound_learner", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_learner = scalar(k, e); }},
      {"bound_family", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_family = scalar(k, e); }},
      {"bound_max_epochs", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.bound_max_epochs = as_count(k, e, scalar(k, e)); }},
      {"flip_update", [](RunConfig& c, const std::string& k, const Entry& e, const P&) { c.flip_update = as_count(k, e, scalar(k, e)); }},
  };
  return table;
}

const std::set<std::string> kAlgorithms = {"cusum", "cusum-pa", "prank", "counting", "kernel-cusum"};

}  // namespace

void validate_config(const RunConfig& c) {
  if (c.bins < 2) throw ConfigError("config key 'bins': need at least 2 ranks");
  if (!kAlgorithms.contains(c.algorithm))
    throw ConfigError("config key 'algorithm': unknown algorithm '" + c.algorithm +
                      "' (expected cusum, cusum-pa, prank, counting or kernel-cusum)");
  if (!(c.delta > 0.0)) throw ConfigError("config key 'delta': must be positive");
  if (c.partitions == 0) throw ConfigError("config key 'partitions': must be at least 1");
  if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0))
    throw ConfigError("config key 'train_fraction': must be in (0, 1]");
  if (c.threads == 0) throw ConfigError("config key 'threads': must be at least 1");
  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0))
    throw ConfigError("config key 'validation_fraction': must be in (0, 1)");
  if (c.mlp.hidden == 0) throw ConfigError("config key 'hidden': must be at least 1");
  if (!(c.mlp.learning_rate > 0.0)) throw ConfigError("config key 'learning_rate': must be positive");
  for (double s : c.shrinkage)
    if (!(s > 0.0 && s <= 1.0)) throw ConfigError("config key 'shrinkage': values must be in (0, 1]");
  for (double s : c.margin_scale)
    if (s < 0.0) throw ConfigError("config key 'margin_scale': values must be non-negative");
  if (c.bound_family != "rank" && c.bound_family != "prank")
    throw ConfigError("config key 'bound_family': expected rank or prank");
  try {
    bound_learner_from_string(c.bound_learner);
  } catch (const Error& e) {
    throw ConfigError(std::string("config key 'bound_learner': ") + e.what());
  }
  if (c.bound_r < 2) throw ConfigError("config key 'bound_r': need at least 2 ranks");
}


const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!setters().contains(key))
      throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(line_no) + ")");
    if (entries.contains(key))
      throw ConfigError("duplicate config key '" + key + "' (line " + std::to_string(line_no) + ")");
    Entry e;
    e.line = line_no;
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("config key '" + key + "' (line " + std::to_string(line_no) + "): unterminated list");
      e.is_list = true;
      std::stringstream items(value.substr(1, value.size() - 2));
      std::string item;
      while (std::getline(items, item, ',')) {
        item = unquote(trim(item));
        if (!item.empty()) e.values.push_back(item);
      }
    } else {
      if (value.empty())
        throw ConfigError("config key '" + key + "' (line " + std::to_string(line_no) + "): missing value");
      e.values.push_back(unquote(value));
    }
    entries.emplace(key, std::move(e));
    order.push_back(key);
  }
  RunConfig config;
  for (const auto& key : order) setters().at(key)(config, key, entries.at(key), base_dir);
  validate_config(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

// ---- pipeline ---------------------------------------------------------------

namespace {

Vector normalize_row(const Normalizer& n, std::span<const double> row) {
  if (n.width() == 0) return Vector(row.begin(), row.end());
  return n.transform(row);
}

}  // namespace

Vector Pipeline::transform(std::span<const double> raw) const {
  Vector v = normalize_row(input, raw);
  if (network) v = normalize_row(embedding, mlp_embed(*network, v));
  v.push_back(-1.0);
  return v;
}

std::vector<Vector> Pipeline::transform(const std::vector<Vector>& rows) const {
  std::vector<Vector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(transform(r));
  return out;
}

RankedDataset Pipeline::dataset(const std::vector<Vector>& rows, std::span<const int> ranks) const {
  if (rows.size() != ranks.size()) throw Error("pipeline: row/rank count mismatch");
  std::vector<RankedExample> examples;
  examples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) examples.push_back({transform(rows[i]), ranks[i]});
  return RankedDataset(std::move(examples), discretizer.bins());
}

int predict_rank(const LearnedModel& model, std::span<const double> x) {
  return std::visit(
      [&x](const auto& m) -> int {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CuSumModel>) return cusum_predict(m, x);
        else if constexpr (std::is_same_v<M, PRankModel>) return prank_predict(m, x.first(x.size() - 1));
        else if constexpr (std::is_same_v<M, CountingModel>) return counting_predict(m, x);
        else return dual_predict(m, x);
      },
      model);
}

int ModelArtifact::predict(std::span<const double> raw) const {
  return predict_rank(model, pipeline.transform(raw));
}

// ---- artifact format ---------------------------------------------------------

namespace {

void write_block(std::ostream& out, const std::string& name, std::span<const double> values) {
  out << "block " << name << ' ' << values.size() << '\n';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << format_double(values[i]);
  }
  out << '\n';
}

std::string kernel_name(Kernel::Kind k) {
  switch (k) {
    case Kernel::Kind::linear: return "linear";
    case Kernel::Kind::polynomial: return "polynomial";
    case Kernel::Kind::rbf: return "rbf";
  }
  return "?";
}

std::size_t model_dim(const LearnedModel& m) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using M = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<M, CuSumModel>) return v.dim();
        else if constexpr (std::is_same_v<M, PRankModel>) return v.direction.size() + 1;
        else if constexpr (std::is_same_v<M, CountingModel>) return v.weights.dim();
        else return v.dim();
      },
      m);
}

}  // namespace

void save_artifact(std::ostream& out, const ModelArtifact& a) {
  const auto& p = a.pipeline;
  const int r = a.rank_count();
  out << "format=1\n";
  out << "algo=" << a.algorithm << '\n';
  out << "r=" << r << '\n';
  out << "d=" << model_dim(a.model) << '\n';
  out << "h=" << (p.network ? p.network->hidden : 0) << '\n';
  out << "binning=" << to_string(p.discretizer.strategy()) << '\n';
  out << "normalization=" << to_string(p.input.strategy()) << '\n';
  if (p.network) {
    out << "activation=" << to_string(p.network->activation) << '\n';
    out << "embedding_normalization=" << to_string(p.embedding.strategy()) << '\n';
  }
  if (const auto* dual = std::get_if<DualCuSumModel>(&a.model)) {
    const Kernel& k = dual->kernel();
    out << "kernel=" << kernel_name(k.kind) << '\n';
    out << "kernel_degree=" << k.degree << '\n';
    out << "kernel_coef0=" << format_double(k.coef0) << '\n';
    out << "kernel_gamma=" << format_double(k.gamma) << '\n';
  }
  write_block(out, "cuts", p.discretizer.cuts());
  write_block(out, "input_offset", p.input.offset());
  write_block(out, "input_scale", p.input.scale());
  if (p.network) {
    const auto& n = *p.network;
    write_block(out, "mlp_hidden_weights", n.hidden_weights);
    write_block(out, "mlp_hidden_bias", n.hidden_bias);
    write_block(out, "mlp_output_weights", n.output_weights);
    const Vector tail{n.output_bias, n.target_mean, n.target_scale};
    write_block(out, "mlp_output", tail);
    write_block(out, "embedding_offset", p.embedding.offset());
    write_block(out, "embedding_scale", p.embedding.scale());
  }
  std::visit(
      [&out, r](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CuSumModel> || std::is_same_v<M, CountingModel>) {
          for (int k = 1; k <= r; ++k) write_block(out, "level_" + std::to_string(k), m.weights.level(k));
        } else if constexpr (std::is_same_v<M, PRankModel>) {
          write_block(out, "direction", m.direction);
          write_block(out, "thresholds", m.thresholds);
        } else {
          Vector examples;
          for (const auto& s : m.support()) examples.push_back(static_cast<double>(s.example));
          write_block(out, "support_examples", examples);
          for (std::size_t i = 0; i < m.support().size(); ++i) {
            const auto& s = m.support()[i];
            write_block(out, "support_features_" + std::to_string(i), s.features);
            const Vector beta(s.beta.begin(), s.beta.end());
            write_block(out, "support_beta_" + std::to_string(i), beta);
          }
        }
      },
      a.model);
}

namespace {

struct ArtifactReader {
  std::map<std::string, std::string> header;
  std::map<std::string, Vector> blocks;

  const std::string& head(const std::string& key) const {
    auto it = header.find(key);
    if (it == header.end()) throw Error("artifact: missing header '" + key + "'");
    return it->second;
  }
  const Vector& block(const std::string& name, std::optional<std::size_t> expected = std::nullopt) const {
    auto it = blocks.find(name);
    if (it == blocks.end()) throw Error("artifact: missing block '" + name + "'");
    if (expected && it->second.size() != *expected)
      throw Error("artifact: block '" + name + "' has " + std::to_string(it->second.size()) +
                  " values, expected " + std::to_string(*expected));
    return it->second;
  }
  long long integer(const std::string& key) const {
    const auto& s = head(key);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw Error("artifact: header '" + key + "' is not an integer");
    return v;
  }
};

double parse_value(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw Error("artifact: bad number '" + token + "'");
  return v;
}

Normalizer read_normalizer(const ArtifactReader& rd, const std::string& prefix,
                           const std::string& header_key) {
  const auto strategy = normalization_from_string(rd.head(header_key));
  const Vector& offset = rd.block(prefix + "_offset");
  const Vector& scale = rd.block(prefix + "_scale", offset.size());
  return Normalizer(strategy, offset, scale);
}

}  // namespace

ModelArtifact load_artifact(std::istream& in) {
  ArtifactReader rd;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("block ", 0) == 0) {
      std::istringstream head(line.substr(6));
      std::string name;
      std::size_t count = 0;
      if (!(head >> name >> count)) throw Error("artifact: malformed block line '" + line + "'");
      std::string values;
      if (!std::getline(in, values)) throw Error("artifact: block '" + name + "' is truncated");
      std::istringstream tokens(values);
      Vector v;
      std::string token;
      while (tokens >> token) v.push_back(parse_value(token));
      if (v.size() != count)
        throw Error("artifact: block '" + name + "' declares " + std::to_string(count) +
                    " values but has " + std::to_string(v.size()));
      if (!rd.blocks.emplace(name, std::move(v)).second)
        throw Error("artifact: duplicate block '" + name + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("artifact: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    if (first && (key != "format" || line.substr(eq + 1) != "1"))
      throw Error("artifact: unsupported format (expected format=1 first)");
    first = false;
    rd.header[key] = line.substr(eq + 1);
  }
  if (first) throw Error("artifact: empty file");

  ModelArtifact a;
  a.algorithm = rd.head("algo");
  const int r = static_cast<int>(rd.integer("r"));
  const auto d = static_cast<std::size_t>(rd.integer("d"));
  const auto h = static_cast<std::size_t>(rd.integer("h"));
  if (r < 2 || d < 1) throw Error("artifact: bad dimensions");

  a.pipeline.discretizer = Discretizer(binning_from_string(rd.head("binning")), r, rd.block("cuts"));
  a.pipeline.input = read_normalizer(rd, "input", "normalization");
  if (h > 0) {
    const Vector& hw = rd.block("mlp_hidden_weights");
    if (hw.size() % h != 0) throw Error("artifact: hidden weight count is not a multiple of h");
    MLPRegressor n(hw.size() / h, h, activation_from_string(rd.head("activation")));
    n.hidden_weights = hw;
    n.hidden_bias = rd.block("mlp_hidden_bias", h);
    n.output_weights = rd.block("mlp_output_weights", h);
    const Vector& tail = rd.block("mlp_output", 3);
    n.output_bias = tail[0];
    n.target_mean = tail[1];
    n.target_scale = tail[2];
    a.pipeline.network = std::move(n);
    a.pipeline.embedding = read_normalizer(rd, "embedding", "embedding_normalization");
  }

  if (a.algorithm == "cusum" || a.algorithm == "cusum-pa" || a.algorithm == "counting") {
    WeightStack w(r, d);
    for (int k = 1; k <= r; ++k) {
      const Vector& v = rd.block("level_" + std::to_string(k), d);
      std::copy(v.begin(), v.end(), w.level(k).begin());
    }
    if (a.algorithm == "counting") {
      CountingModel m;
      m.weights = std::move(w);
      a.model = std::move(m);
    } else {
      a.model = CuSumModel(std::move(w));
    }
  } else if (a.algorithm == "prank") {
    PRankModel m;
    m.direction = rd.block("direction", d - 1);
    m.thresholds = rd.block("thresholds", static_cast<std::size_t>(r));
    a.model = std::move(m);
  } else if (a.algorithm == "kernel-cusum") {
    Kernel k;
    const auto& kind = rd.head("kernel");
    if (kind == "linear") k.kind = Kernel::Kind::linear;
    else if (kind == "polynomial") k.kind = Kernel::Kind::polynomial;
    else if (kind == "rbf") k.kind = Kernel::Kind::rbf;
    else throw Error("artifact: unknown kernel '" + kind + "'");
    k.degree = static_cast<int>(rd.integer("kernel_degree"));
    k.coef0 = parse_value(rd.head("kernel_coef0"));
    k.gamma = parse_value(rd.head("kernel_gamma"));
    DualCuSumModel m(r, d, k);
    const Vector& examples = rd.block("support_examples");
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const Vector& beta = rd.block("support_beta_" + std::to_string(i), static_cast<std::size_t>(r - 1));
      m.add_entry({static_cast<std::size_t>(examples[i]), rd.block("support_features_" + std::to_string(i), d),
                   std::vector<int>(beta.begin(), beta.end())});
    }
    a.model = std::move(m);
  } else {
    throw Error("artifact: unknown algorithm '" + a.algorithm + "'");
  }
  return a;
}

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact) {
  std::ostringstream buf;
  save_artifact(buf, artifact);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model " + path.string());
  out << buf.str();
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model " + path.string());
  return load_artifact(in);
}

// ---- training -----------------------------------------------------------------

LearnerOutcome train_learner(const RunConfig& config, const GridPoint& point,
                             const RankedDataset& data) {
  const int r = data.rank_count();
  const std::size_t d = data.dim();
  TrainOptions opts;
  opts.epochs = point.epochs;
  opts.stop_when_clean = true;
  opts.averaging = config.averaging;
  opts.shrinkage = point.shrinkage;
  if (point.margin_scale > 0.0) opts.cost_augment = CostAugment{LossFn::absolute(), point.margin_scale};
  if (config.shuffle) opts.shuffle_seed = config.seed;

  const auto finish = [&](const auto& problem, const TrainResult& res) {
    const Vector& w = config.averaging ? res.averaged : res.weights;
    return LearnerOutcome{problem.to_model(w), res.trace.mistakes(), res.trace.epochs()};
  };

  if (config.algorithm == "cusum" || config.algorithm == "cusum-pa") {
    CuSumProblem problem(r, d);
    if (config.algorithm == "cusum-pa")
      opts.rule = UpdateRule::passive_aggressive(LossFn::scaled_zero_one(config.delta));
    return finish(problem, sp_train_online(problem, data, opts));
  }
  if (config.algorithm == "prank") {
    PRankProblem problem(r, d);
    opts.observer = [d, r](const StepRecord& step, std::span<const double> w) {
      const auto b = w.subspan(d - 1, static_cast<std::size_t>(r));
      for (int k = 2; k < r; ++k)
        if (b[static_cast<std::size_t>(k - 1)] > b[static_cast<std::size_t>(k)])
          throw std::logic_error("prank thresholds out of order after visit " +
                                 std::to_string(step.visit));
    };
    return finish(problem, sp_train_online(problem, data, opts));
  }
  if (config.algorithm == "counting") {
    CountingFit fit = counting_fit_online(data, {point.epochs, true});
    std::size_t mistakes = 0;
    for (auto m : fit.level_mistakes) mistakes += m;
    return {std::move(fit.model), mistakes, point.epochs};
  }
  DualFit fit = dual_fit_online(data, config.kernel, {point.epochs, true, true});
  return {std::move(fit.model), fit.trace.mistakes(), fit.trace.epochs()};
}

PreparedData prepare_data(const RunConfig& config) {
  if (config.dataset.empty()) throw ConfigError("config key 'dataset' is required");
  PreparedData p;
  p.raw = parse_raw(config.dataset);
  std::tie(p.discretizer, p.ranks) = discretize(p.raw.targets, config.binning, config.bins);
  const std::size_t n = p.raw.size();
  if (config.partition_file) {
    p.partitions = read_partition_file(*config.partition_file, n);
  } else {
    for (std::size_t f = 0; f < config.partitions; ++f) {
      if (config.train_size == 0 && config.train_fraction >= 1.0) {
        Partition all;
        for (std::size_t i = 0; i < n; ++i) all.train.push_back(i);
        all.test = all.train;
        p.partitions.push_back(std::move(all));
      } else {
        const std::size_t size = config.train_size > 0
                                     ? config.train_size
                                     : static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n)));
        p.partitions.push_back(partition_by_size(n, mix_seed(config.seed, f), size));
      }
    }
  }
  return p;
}

FoldResult run_fold(const RunConfig& config, const PreparedData& data, std::size_t fold,
                    const GridPoint& point) {
  if (fold >= data.partitions.size())
    throw Error("fold index " + std::to_string(fold) + " out of range (have " +
                std::to_string(data.partitions.size()) + " partitions)");
  const Partition& part = data.partitions[fold];
  const auto train_rows = select(data.raw.features, part.train);
  const auto test_rows = select(data.raw.features, part.test);
  const auto train_ranks = select(data.ranks, part.train);
  const auto test_ranks = select(data.ranks, part.test);

  FoldResult out;
  out.fold = fold;
  out.point = point;
  out.train_size = part.train.size();
  out.test_size = part.test.size();

  Pipeline pipe;
  pipe.discretizer = data.discretizer;
  pipe.input = Normalizer::fit(train_rows, point.normalization);
  if (config.features) {
    const auto normalized = pipe.input.transform(train_rows);
    const auto train_targets = select(data.raw.targets, part.train);
    const std::size_t n = normalized.size();
    const auto fit_size = n - static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n)));
    const Partition inner = partition_by_size(n, mix_seed(config.seed, 1000 + fold), fit_size);
    MLPOptions mopts = config.mlp;
    mopts.seed = mix_seed(config.seed, 2000 + fold);
    MLPTrainResult mlp = mlp_train(select(normalized, inner.train), select(train_targets, inner.train),
                                   select(normalized, inner.test), select(train_targets, inner.test), mopts);
    out.feature_epochs = mlp.epochs_run;
    std::vector<Vector> embedded;
    embedded.reserve(n);
    for (const auto& row : normalized) embedded.push_back(mlp_embed(mlp.model, row));
    pipe.network = std::move(mlp.model);
    pipe.embedding = Normalizer::fit(embedded, point.normalization);
  }

  const RankedDataset train = pipe.dataset(train_rows, train_ranks);
  const RankedDataset test = pipe.dataset(test_rows, test_ranks);
  LearnerOutcome learned = train_learner(config, point, train);
  out.mistakes = learned.mistakes;
  out.epochs_run = learned.epochs_run;

  const auto mae_on = [&learned](const RankedDataset& ds) {
    std::vector<int> truth, pred;
    for (const auto& ex : ds) {
      truth.push_back(ex.rank);
      pred.push_back(predict_rank(learned.model, ex.x()));
    }
    return mean_absolute_error(truth, pred);
  };
  out.train_mae = mae_on(train);
  out.test_mae = mae_on(test);
  out.artifact = ModelArtifact{config.algorithm, std::move(pipe), std::move(learned.model)};
  return out;
}

namespace {

std::vector<GridPoint> grid(const RunConfig& c) {
  std::vector<GridPoint> points;
  for (auto n : c.normalization)
    for (auto e : c.epochs)
      for (auto m : c.margin_scale)
        for (auto s : c.shrinkage) points.push_back({n, e, m, s});
  return points;
}

template <typename F>
void parallel_for(std::size_t count, std::size_t threads, F body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::min(threads, count);
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

FoldResult select_on_first_partition(const RunConfig& config, const PreparedData& data) {
  const auto points = grid(config);
  std::vector<std::optional<FoldResult>> results(points.size());
  parallel_for(points.size(), config.threads,
               [&](std::size_t i) { results[i] = run_fold(config, data, 0, points[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i]->test_mae < results[best]->test_mae) best = i;
  return std::move(*results[best]);
}

BenchResult run_bench(const RunConfig& config, const PreparedData& data) {
  BenchResult out;
  std::vector<std::size_t> folds = config.folds;
  if (folds.empty()) {
    if (data.partitions.size() == 1) folds.push_back(0);
    for (std::size_t f = 1; f < data.partitions.size(); ++f) folds.push_back(f);
  }
  for (auto f : folds)
    if (f >= data.partitions.size())
      throw Error("fold index " + std::to_string(f) + " out of range (have " +
                  std::to_string(data.partitions.size()) + " partitions)");

  const auto points = grid(config);
  out.selected = points.size() > 1 ? select_on_first_partition(config, data).point : points.front();

  std::vector<std::optional<FoldResult>> results(folds.size());
  parallel_for(folds.size(), config.threads,
               [&](std::size_t i) { results[i] = run_fold(config, data, folds[i], out.selected); });
  for (auto& r : results) out.folds.push_back(std::move(*r));

  const auto count = static_cast<double>(out.folds.size());
  double sum = 0.0;
  for (const auto& f : out.folds) sum += f.test_mae;
  out.mean_test_mae = sum / count;
  if (out.folds.size() > 1) {
    double ss = 0.0;
    for (const auto& f : out.folds) ss += (f.test_mae - out.mean_test_mae) * (f.test_mae - out.mean_test_mae);
    out.stderr_test_mae = std::sqrt(ss / (count - 1.0)) / std::sqrt(count);
  }
  return out;
}

// ---- verify-bounds ------------------------------------------------------------

BoundSuite run_bound_suite(const RunConfig& config) {
  const BoundLearner learner = bound_learner_from_string(config.bound_learner);
  if (learner == BoundLearner::cusum_pa && config.delta > 1.0)
    throw ConfigError("delta = " + format_double(config.delta) +
                      " refused: the passive-aggressive loss bound is only checked for delta <= 1");
  BoundSuite suite;
  VerifyOptions opts;
  opts.max_epochs = config.bound_max_epochs;
  opts.flip_update = config.flip_update;
  for (std::size_t i = 0; i < config.bound_seeds; ++i) {
    const std::uint64_t seed = config.bound_first_seed + i;
    const PlantedProblem problem =
        config.bound_family == "rank"
            ? generate_rank_separable(seed, config.bound_n, config.bound_d, config.bound_r, config.delta, config.bound_radius)
            : generate_prank_separable(seed, config.bound_n, config.bound_d, config.bound_r, config.delta, config.bound_radius);
    BoundReport report = verify_bounds(problem, learner, opts);
    if (!report.passed()) ++suite.violations;
    suite.rows.push_back({seed, std::move(report)});
  }
  return suite;
}

// ---- reports --------------------------------------------------------------------

void write_fold_csv(std::ostream& out, const std::vector<FoldResult>& folds,
                    const std::optional<BenchResult>& aggregate) {
  out << kFoldReportVersion << '\n';
  out << "fold,algorithm,normalization,epochs,margin_scale,shrinkage,train_size,test_size,"
         "train_mae,test_mae,mistakes,epochs_run,feature_epochs\n";
  for (const auto& f : folds) {
    out << f.fold << ',' << f.artifact.algorithm << ',' << to_string(f.point.normalization) << ','
        << f.point.epochs << ',' << format_double(f.point.margin_scale) << ','
        << format_double(f.point.shrinkage) << ',' << f.train_size << ',' << f.test_size << ','
        << format_double(f.train_mae) << ',' << format_double(f.test_mae) << ',' << f.mistakes
        << ',' << f.epochs_run << ',' << f.feature_epochs << '\n';
  }
  if (aggregate) {
    out << "mean,,,,,,,,," << format_double(aggregate->mean_test_mae) << ",,,\n";
    out << "stderr,,,,,,,,," << format_double(aggregate->stderr_test_mae) << ",,,\n";
  }
}

void write_fold_table(std::ostream& out, const std::vector<FoldResult>& folds,
                      const std::optional<BenchResult>& aggregate) {
  out << std::left << std::setw(8) << "fold" << std::right << std::setw(12) << "train MAE"
      << std::setw(12) << "test MAE" << std::setw(10) << "mistakes" << std::setw(8) << "epochs"
      << '\n';
  for (const auto& f : folds)
    out << std::left << std::setw(8) << f.fold << std::right << std::setw(12) << fixed4(f.train_mae)
        << std::setw(12) << fixed4(f.test_mae) << std::setw(10) << f.mistakes << std::setw(8)
        << f.epochs_run << '\n';
  if (aggregate)
    out << std::left << std::setw(8) << "mean" << std::right << std::setw(12) << ""
        << std::setw(12) << fixed4(aggregate->mean_test_mae) << "  +/- "
        << fixed4(aggregate->stderr_test_mae) << '\n';
}

void write_bound_csv(std::ostream& out, const RunConfig& config, const BoundSuite& suite) {
  out << kBoundReportVersion << '\n';
  out << "seed,learner,family,n,d,r,delta,radius,separable,converged,epochs_run,mistakes,"
         "cumulative_loss,check,value,bound,holds,violation_step\n";
  for (const auto& row : suite.rows) {
    const auto& rep = row.report;
    for (const auto& c : rep.checks) {
      out << row.seed << ',' << to_string(rep.learner) << ',' << config.bound_family << ','
          << config.bound_n << ',' << config.bound_d << ',' << config.bound_r << ','
          << format_double(rep.ledger.delta) << ',' << format_double(rep.ledger.radius) << ','
          << (rep.separable ? "true" : "false") << ',' << (rep.converged ? "true" : "false")
          << ',' << rep.epochs_run << ',' << rep.ledger.mistakes << ','
          << format_double(rep.ledger.cumulative_loss) << ',' << c.name << ','
          << format_double(c.value) << ',' << format_double(c.bound) << ','
          << (c.holds ? "true" : "false") << ','
          << (c.violation_step ? std::to_string(*c.violation_step) : "") << '\n';
    }
  }
}

void write_bound_table(std::ostream& out, const BoundSuite& suite) {
  struct Summary {
    std::size_t runs = 0, violations = 0;
    double worst_ratio = 0.0;
  };
  std::map<std::string, Summary> by_check;
  std::vector<std::string> order;
  for (const auto& row : suite.rows)
    for (const auto& c : row.report.checks) {
      if (!by_check.contains(c.name)) order.push_back(c.name);
      auto& s = by_check[c.name];
      ++s.runs;
      if (!c.holds) ++s.violations;
      if (c.bound > 0.0) s.worst_ratio = std::max(s.worst_ratio, c.value / c.bound);
    }
  out << std::left << std::setw(10) << "check" << std::right << std::setw(8) << "runs"
      << std::setw(12) << "violations" << std::setw(18) << "max value/bound" << '\n';
  for (const auto& name : order) {
    const auto& s = by_check[name];
    out << std::left << std::setw(10) << name << std::right << std::setw(8) << s.runs
        << std::setw(12) << s.violations << std::setw(18) << fixed4(s.worst_ratio) << '\n';
  }
  for (const auto& row : suite.rows) {
    if (!row.report.separable) out << "seed " << row.seed << ": planted problem failed its separability check\n";
    for (const auto& c : row.report.checks)
      if (!c.holds)
        out << "seed " << row.seed << ": " << c.name << " violated at step "
            << (c.violation_step ? std::to_string(*c.violation_step) : "?") << " (value "
            << format_double(c.value) << " > bound " << format_double(c.bound) << ")\n";
  }
  out << (suite.violations == 0 ? "all bounds hold" : std::to_string(suite.violations) + " run(s) violated a bound")
      << " over " << suite.rows.size() << " seed(s)\n";
}

}  // namespace ordinal
