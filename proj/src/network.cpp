#include "sesn/network.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace sesn {

NetworkConfig NetworkConfig::standard(BlockKind kind) {
  NetworkConfig cfg;
  cfg.block_kind = kind;
  return cfg;
}

NetworkConfig NetworkConfig::reduced(BlockKind kind) {
  NetworkConfig cfg;
  cfg.block_kind = kind;
  cfg.blocks = {{4, 2, 2, 2, 0.0}, {8, 2, 2, 2, 0.0}, {16, 2, 2, 5, 0.0}};
  cfg.dense_units = 32;
  cfg.head_dropout = 0.0;
  cfg.mels = 8;
  cfg.frames = 20;
  return cfg;
}

void NetworkConfig::validate() const {
  if (blocks.empty()) throw ConfigError("network needs at least one block");
  if (mels == 0 || frames == 0 || channels == 0) throw ConfigError("input extents must be positive");
  if (dense_units == 0 || num_classes < 2) throw ConfigError("dense_units must be positive, num_classes >= 2");
  if (!(head_dropout >= 0.0 && head_dropout < 1.0)) throw ConfigError("head dropout must lie in [0,1)");
  std::size_t h = mels, w = frames;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    const std::string where = "block " + std::to_string(i + 1) + ": ";
    if (b.filters == 0) throw ConfigError(where + "filter count must be positive");
    if (b.ratio == 0 || b.filters % b.ratio != 0)
      throw ConfigError(where + "filters " + std::to_string(b.filters) + " not divisible by ratio " +
                        std::to_string(b.ratio));
    if (b.pool_h == 0 || b.pool_w == 0 || h % b.pool_h != 0 || w % b.pool_w != 0)
      throw ConfigError(where + "pool " + std::to_string(b.pool_h) + "x" + std::to_string(b.pool_w) +
                        " does not divide running extent " + std::to_string(h) + "x" + std::to_string(w));
    if (!(b.dropout >= 0.0 && b.dropout < 1.0)) throw ConfigError(where + "dropout must lie in [0,1)");
    h /= b.pool_h;
    w /= b.pool_w;
  }
}

std::size_t NetworkConfig::flatten_width() const {
  std::size_t h = mels, w = frames;
  for (const auto& b : blocks) {
    h /= b.pool_h;
    w /= b.pool_w;
  }
  return h * w * blocks.back().filters;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& key, const std::string& what) {
  T v{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError(what + ": value '" + s + "' for key '" + key + "' is not a valid number");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& key, const std::string& what) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse_number<T>(item, key, what));
  if (out.empty()) throw ConfigError(what + ": key '" + key + "' is empty");
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

}  // namespace

NetworkConfig parse_network_config(std::string_view text, const std::string& what) {
  static const char* kKeys[] = {"block_kind", "filters",     "ratio",       "pool_h",
                                "pool_w",     "dropout",     "dense_units", "num_classes",
                                "mels",       "frames",      "channels"};
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(what + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys))
      throw ConfigError(what + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    kv[key] = value;
  }

  NetworkConfig cfg;
  if (kv.count("block_kind")) cfg.block_kind = parse_block_kind(kv["block_kind"]);
  std::vector<std::size_t> filters, ratios, pool_h, pool_w;
  std::vector<Real> dropout;
  for (const auto& b : cfg.blocks) {
    filters.push_back(b.filters);
    ratios.push_back(b.ratio);
    pool_h.push_back(b.pool_h);
    pool_w.push_back(b.pool_w);
    dropout.push_back(b.dropout);
  }
  if (kv.count("filters")) filters = parse_list<std::size_t>(kv["filters"], "filters", what);
  const std::size_t n = filters.size();
  auto per_block = [&](const char* key, std::vector<std::size_t>& target) {
    if (kv.count(key)) target = parse_list<std::size_t>(kv[key], key, what);
    if (target.size() == 1 && n > 1) target.assign(n, target[0]);
    if (target.size() != n)
      throw ConfigError(what + ": key '" + key + "' needs 1 or " + std::to_string(n) + " values");
  };
  per_block("ratio", ratios);
  per_block("pool_h", pool_h);
  per_block("pool_w", pool_w);
  if (kv.count("dropout")) {
    dropout = parse_list<Real>(kv["dropout"], "dropout", what);
    if (dropout.size() == n + 1) {
      cfg.head_dropout = dropout.back();
      dropout.pop_back();
    } else if (dropout.size() == 1 && n > 1) {
      dropout.assign(n, dropout[0]);
    }
  }
  if (dropout.size() != n)
    throw ConfigError(what + ": key 'dropout' needs " + std::to_string(n) + " or " +
                      std::to_string(n + 1) + " values");
  cfg.blocks.clear();
  for (std::size_t i = 0; i < n; ++i)
    cfg.blocks.push_back({filters[i], ratios[i], pool_h[i], pool_w[i], dropout[i]});
  if (kv.count("dense_units")) cfg.dense_units = parse_number<std::size_t>(kv["dense_units"], "dense_units", what);
  if (kv.count("num_classes")) cfg.num_classes = parse_number<std::size_t>(kv["num_classes"], "num_classes", what);
  if (kv.count("mels")) cfg.mels = parse_number<std::size_t>(kv["mels"], "mels", what);
  if (kv.count("frames")) cfg.frames = parse_number<std::size_t>(kv["frames"], "frames", what);
  if (kv.count("channels")) cfg.channels = parse_number<std::size_t>(kv["channels"], "channels", what);
  cfg.validate();
  return cfg;
}

NetworkConfig load_network_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_config(ss.str(), path);
}

std::string format_network_config(const NetworkConfig& cfg) {
  std::vector<std::size_t> filters, ratios, pool_h, pool_w;
  std::vector<Real> dropout;
  for (const auto& b : cfg.blocks) {
    filters.push_back(b.filters);
    ratios.push_back(b.ratio);
    pool_h.push_back(b.pool_h);
    pool_w.push_back(b.pool_w);
    dropout.push_back(b.dropout);
  }
  dropout.push_back(cfg.head_dropout);
  std::ostringstream os;
  os << "block_kind = " << to_string(cfg.block_kind) << '\n'
     << "filters = " << join(filters) << '\n'
     << "ratio = " << join(ratios) << '\n'
     << "pool_h = " << join(pool_h) << '\n'
     << "pool_w = " << join(pool_w) << '\n'
     << "dropout = " << join(dropout) << '\n'
     << "dense_units = " << cfg.dense_units << '\n'
     << "num_classes = " << cfg.num_classes << '\n'
     << "mels = " << cfg.mels << '\n'
     << "frames = " << cfg.frames << '\n'
     << "channels = " << cfg.channels << '\n';
  return os.str();
}

Model build_model(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  Rng rng(seed);
  std::size_t in = cfg.channels;
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    const auto& stage = cfg.blocks[i];
    m.blocks_.push_back(make_block(cfg.block_kind, in, stage.filters, stage.ratio, rng));
    register_block(m.blocks_.back(), m.params_, "block" + std::to_string(i + 1));
    in = stage.filters;
  }
  m.hidden_ = make_dense(cfg.flatten_width(), cfg.dense_units, rng);
  m.hidden_bn_ = make_batchnorm(cfg.dense_units);
  m.output_ = make_dense(cfg.dense_units, cfg.num_classes, rng);
  m.output_bn_ = make_batchnorm(cfg.num_classes);

  auto add_layer = [&](const LayerParams& p, const std::string& name) {
    m.params_.add(name + ".weight", p.weights, true);
    if (p.bias) m.params_.add(name + ".bias", p.bias, true);
    if (p.running_mean) m.params_.add(name + ".running_mean", p.running_mean, false);
    if (p.running_var) m.params_.add(name + ".running_var", p.running_var, false);
  };
  add_layer(m.hidden_, "head.dense1");
  add_layer(m.hidden_bn_, "head.bn1");
  add_layer(m.output_, "head.dense2");
  add_layer(m.output_bn_, "head.bn2");
  return m;
}

Var Model::logits(const Var& batch, bool training, Rng& rng, std::vector<Shape>* trace) const {
  const Shape& s = batch->shape();
  if (s.size() != 4 || s[1] != cfg_.mels || s[2] != cfg_.frames || s[3] != cfg_.channels)
    throw InputError("model expects batches of shape (B," + std::to_string(cfg_.mels) + "," +
                     std::to_string(cfg_.frames) + "," + std::to_string(cfg_.channels) + "), got " +
                     shape_to_string(s));
  auto record = [trace](const Var& v) {
    if (trace) trace->push_back(v->shape());
  };
  Var x = batch;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& stage = cfg_.blocks[i];
    x = block_forward(x, blocks_[i], training);
    record(x);
    x = maxpool2d(x, stage.pool_h, stage.pool_w);
    record(x);
    x = dropout(x, stage.dropout, training, rng);
  }
  x = flatten(x);
  record(x);
  x = elu(batchnorm(dense(x, hidden_), hidden_bn_, training));
  record(x);
  x = dropout(x, cfg_.head_dropout, training, rng);
  x = batchnorm(dense(x, output_), output_bn_, training);
  record(x);
  return x;
}

Var Model::forward(const Var& batch, bool training, Rng& rng) const {
  return softmax(logits(batch, training, rng));
}

std::vector<int> Model::predict(const Tensor& batch) const {
  Rng unused(0);
  Var scores = logits(constant(batch), false, unused);
  const std::size_t B = scores->shape()[0], K = scores->shape()[1];
  std::vector<int> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k)
      if (scores->value[b * K + k] > scores->value[b * K + best]) best = k;
    out[b] = static_cast<int>(best);
  }
  return out;
}

}  // namespace sesn
