#include "moedti/kg_embed.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace moedti {

namespace {

constexpr char kMagic[8] = {'M', 'D', 'T', 'I', 'E', 'M', 'B', '1'};

void normalize_rows(Tensor& t) {
  const int64_t rows = t.shape[0], d = t.shape[1];
  for (int64_t i = 0; i < rows; ++i) {
    double* row = t.data.data() + i * d;
    double s = 0.0;
    for (int64_t j = 0; j < d; ++j) s += row[j] * row[j];
    double norm = std::sqrt(s);
    if (norm > 0.0) {
      for (int64_t j = 0; j < d; ++j) row[j] /= norm;
    }
  }
}

void check_pretrain_inputs(const KnowledgeGraph& kg, const KgTrainConfig& cfg) {
  if (kg.triples.empty()) {
    throw ContractError("embedding pretraining: empty triple set");
  }
  if (cfg.dim < 2) throw ConfigError("embedding dim must be >= 2");
  if (cfg.epochs < 1) throw ConfigError("embedding epochs must be >= 1");
  if (!(cfg.lr > 0.0)) throw ConfigError("embedding lr must be > 0");
}

EntityEmbeddingTable init_table(const KnowledgeGraph& kg, const KgTrainConfig& cfg,
                                const std::string& method, Rng& rng) {
  EntityEmbeddingTable tb;
  tb.dim = cfg.dim;
  tb.method = method;
  tb.seed = cfg.seed;
  tb.entity_ids = kg.entity_ids;
  const double b = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  tb.entity = Tensor::uniform({kg.num_entities(), cfg.dim}, -b, b, rng);
  tb.relation = Tensor::uniform({std::max<int64_t>(kg.num_relations(), 1), cfg.dim},
                                -b, b, rng);
  return tb;
}

double wrap_phase(double th) {
  const double two_pi = 2.0 * std::numbers::pi;
  while (th > std::numbers::pi) th -= two_pi;
  while (th <= -std::numbers::pi) th += two_pi;
  return th;
}

}  // namespace

double transe_distance(std::span<const double> h, std::span<const double> r,
                       std::span<const double> t) {
  double s = 0.0;
  for (size_t i = 0; i < h.size(); ++i) {
    double d = h[i] + r[i] - t[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double margin_hinge(double margin, double pos_dist, double neg_dist) {
  return std::max(0.0, margin + pos_dist - neg_dist);
}

double rotate_distance(std::span<const double> h, std::span<const double> phases,
                       std::span<const double> t) {
  double s = 0.0;
  const size_t half = phases.size();
  for (size_t i = 0; i < half; ++i) {
    double c = std::cos(phases[i]), sn = std::sin(phases[i]);
    double hr = h[2 * i], hi = h[2 * i + 1];
    double ur = hr * c - hi * sn - t[2 * i];
    double ui = hr * sn + hi * c - t[2 * i + 1];
    s += ur * ur + ui * ui;
  }
  return std::sqrt(s);
}

EntityEmbeddingTable pretrain_transe(const KnowledgeGraph& kg,
                                     const KgTrainConfig& cfg) {
  check_pretrain_inputs(kg, cfg);
  Rng rng = make_rng(derive_seed(cfg.seed, "kg-embed:transe"));
  EntityEmbeddingTable tb = init_table(kg, cfg, "transe", rng);
  normalize_rows(*tb.relation);  // relations normalized once at init

  const int64_t d = cfg.dim;
  std::vector<size_t> order(kg.triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> u(d), v(d);
  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    normalize_rows(*tb.entity);
    shuffle_vec(order, rng);
    double epoch_loss = 0.0;
    for (size_t oi : order) {
      const auto& pos = kg.triples[oi];
      auto neg = sample_negative_triple(kg, pos, rng);
      double* h = tb.entity->data.data() + pos.head * d;
      double* r = tb.relation->data.data() + pos.rel * d;
      double* t = tb.entity->data.data() + pos.tail * d;
      double* hn = tb.entity->data.data() + neg.head * d;
      double* tn = tb.entity->data.data() + neg.tail * d;

      double dp = transe_distance({h, static_cast<size_t>(d)},
                                  {r, static_cast<size_t>(d)},
                                  {t, static_cast<size_t>(d)});
      double dn = transe_distance({hn, static_cast<size_t>(d)},
                                  {r, static_cast<size_t>(d)},
                                  {tn, static_cast<size_t>(d)});
      double loss = margin_hinge(cfg.margin, dp, dn);
      epoch_loss += loss;
      if (loss <= 0.0) continue;

      // d||h+r-t|| gradient directions; degenerate points skipped.
      bool has_u = dp > 1e-12, has_v = dn > 1e-12;
      for (int64_t j = 0; j < d; ++j) {
        u[j] = has_u ? (h[j] + r[j] - t[j]) / dp : 0.0;
        v[j] = has_v ? (hn[j] + r[j] - tn[j]) / dn : 0.0;
      }
      for (int64_t j = 0; j < d; ++j) {
        double gu = cfg.lr * u[j], gv = cfg.lr * v[j];
        h[j] -= gu;
        t[j] += gu;
        hn[j] += gv;
        tn[j] -= gv;
        r[j] -= gu - gv;
      }
    }
    tb.loss_trace.push_back(epoch_loss / static_cast<double>(kg.triples.size()));
  }
  normalize_rows(*tb.entity);
  tb.epochs = cfg.epochs;
  tb.final_loss = tb.loss_trace.back();
  return tb;
}

EntityEmbeddingTable pretrain_rotate(const KnowledgeGraph& kg,
                                     const KgTrainConfig& cfg) {
  check_pretrain_inputs(kg, cfg);
  if (cfg.dim % 2 != 0) {
    throw ConfigError("rotate requires an even embedding dim, got " +
                      std::to_string(cfg.dim));
  }
  Rng rng = make_rng(derive_seed(cfg.seed, "kg-embed:rotate"));
  EntityEmbeddingTable tb = init_table(kg, cfg, "rotate", rng);
  const int64_t d = cfg.dim, half = d / 2;
  // Phases in the first half of each relation row, rest unused.
  for (int64_t i = 0; i < tb.relation->shape[0]; ++i) {
    double* row = tb.relation->data.data() + i * d;
    for (int64_t j = 0; j < half; ++j) {
      row[j] = uniform_real(rng, -std::numbers::pi, std::numbers::pi);
    }
    for (int64_t j = half; j < d; ++j) row[j] = 0.0;
  }

  auto sigmoid = [](double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  };

  std::vector<size_t> order(kg.triples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  // Accumulates one triple's contribution: dL/ddist is 'coef'.
  auto apply = [&](int64_t hi_ix, int64_t rel_ix, int64_t ti_ix, double coef) {
    double* h = tb.entity->data.data() + hi_ix * d;
    double* t = tb.entity->data.data() + ti_ix * d;
    double* ph = tb.relation->data.data() + rel_ix * d;
    double dist = rotate_distance({h, static_cast<size_t>(d)},
                                  {ph, static_cast<size_t>(half)},
                                  {t, static_cast<size_t>(d)});
    if (dist <= 1e-12) return;
    const double k = coef / dist;
    for (int64_t j = 0; j < half; ++j) {
      double c = std::cos(ph[j]), sn = std::sin(ph[j]);
      double rr = h[2 * j] * c - h[2 * j + 1] * sn;
      double ri = h[2 * j] * sn + h[2 * j + 1] * c;
      double ur = rr - t[2 * j], ui = ri - t[2 * j + 1];
      double g_hr = k * (ur * c + ui * sn);
      double g_hi = k * (-ur * sn + ui * c);
      double g_th = k * (-ur * ri + ui * rr);
      h[2 * j] -= cfg.lr * g_hr;
      h[2 * j + 1] -= cfg.lr * g_hi;
      t[2 * j] -= cfg.lr * (-k * ur);
      t[2 * j + 1] -= cfg.lr * (-k * ui);
      ph[j] = wrap_phase(ph[j] - cfg.lr * g_th);
    }
  };

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_vec(order, rng);
    double epoch_loss = 0.0;
    for (size_t oi : order) {
      const auto& pos = kg.triples[oi];
      auto neg = sample_negative_triple(kg, pos, rng);
      const double* h = tb.entity->data.data() + pos.head * d;
      const double* t = tb.entity->data.data() + pos.tail * d;
      const double* ph = tb.relation->data.data() + pos.rel * d;
      const double* hn = tb.entity->data.data() + neg.head * d;
      const double* tn = tb.entity->data.data() + neg.tail * d;
      double dp = rotate_distance({h, static_cast<size_t>(d)},
                                  {ph, static_cast<size_t>(half)},
                                  {t, static_cast<size_t>(d)});
      double dn = rotate_distance({hn, static_cast<size_t>(d)},
                                  {ph, static_cast<size_t>(half)},
                                  {tn, static_cast<size_t>(d)});
      double lp = -std::log(std::max(sigmoid(cfg.margin - dp), 1e-300));
      double ln = -std::log(std::max(sigmoid(dn - cfg.margin), 1e-300));
      epoch_loss += lp + ln;
      apply(pos.head, pos.rel, pos.tail, sigmoid(dp - cfg.margin));
      apply(neg.head, neg.rel, neg.tail, -sigmoid(cfg.margin - dn));
    }
    tb.loss_trace.push_back(epoch_loss / static_cast<double>(kg.triples.size()));
  }
  tb.epochs = cfg.epochs;
  tb.final_loss = tb.loss_trace.back();
  return tb;
}

EntityEmbeddingTable pretrain_embeddings(const KnowledgeGraph& kg,
                                         const std::string& method,
                                         const KgTrainConfig& cfg) {
  if (method == "transe") return pretrain_transe(kg, cfg);
  if (method == "rotate") return pretrain_rotate(kg, cfg);
  throw ConfigError("unknown embedding method: " + method);
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated embedding file: " + path);
  return v;
}

}  // namespace

void save_embeddings(const EntityEmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint64_t>(out, static_cast<uint64_t>(table.dim));
  write_pod<uint64_t>(out, static_cast<uint64_t>(table.entity->shape[0]));
  write_pod<uint64_t>(out, static_cast<uint64_t>(table.relation->shape[0]));
  char method[16] = {};
  std::strncpy(method, table.method.c_str(), sizeof(method) - 1);
  out.write(method, sizeof(method));
  write_pod<uint64_t>(out, table.seed);
  write_pod<uint64_t>(out, static_cast<uint64_t>(table.epochs));
  write_pod<double>(out, table.final_loss);
  out.write(reinterpret_cast<const char*>(table.entity->data.data()),
            table.entity->data.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(table.relation->data.data()),
            table.relation->data.size() * sizeof(double));
  for (const auto& id : table.entity_ids) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  if (!out) throw IoError("failed while writing embedding file: " + path);
}

EntityEmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not an embedding file (bad magic): " + path);
  }
  EntityEmbeddingTable tb;
  const uint64_t d = read_pod<uint64_t>(in, path);
  const uint64_t ne = read_pod<uint64_t>(in, path);
  const uint64_t nr = read_pod<uint64_t>(in, path);
  char method[16];
  in.read(method, sizeof(method));
  if (!in) throw IoError("truncated embedding file: " + path);
  tb.method.assign(method, strnlen(method, sizeof(method)));
  tb.seed = read_pod<uint64_t>(in, path);
  tb.epochs = static_cast<int64_t>(read_pod<uint64_t>(in, path));
  tb.final_loss = read_pod<double>(in, path);
  tb.dim = static_cast<int64_t>(d);
  tb.entity = Tensor::zeros({static_cast<int64_t>(ne), tb.dim});
  tb.relation = Tensor::zeros({static_cast<int64_t>(nr), tb.dim});
  in.read(reinterpret_cast<char*>(tb.entity->data.data()),
          tb.entity->data.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(tb.relation->data.data()),
          tb.relation->data.size() * sizeof(double));
  if (!in) throw IoError("truncated embedding file: " + path);
  tb.entity_ids.reserve(ne);
  for (uint64_t i = 0; i < ne; ++i) {
    uint32_t len = read_pod<uint32_t>(in, path);
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (!in) throw IoError("truncated embedding file: " + path);
    tb.entity_ids.push_back(std::move(id));
  }
  return tb;
}

void validate_embeddings(const EntityEmbeddingTable& table,
                         const KnowledgeGraph& kg) {
  if (table.entity->shape[0] != kg.num_entities()) {
    throw IoError("embedding table covers " +
                  std::to_string(table.entity->shape[0]) + " entities but the graph has " +
                  std::to_string(kg.num_entities()));
  }
  for (int64_t i = 0; i < kg.num_entities(); ++i) {
    if (table.entity_ids[i] != kg.entity_ids[i]) {
      throw IoError("embedding table vocabulary mismatch at row " +
                    std::to_string(i) + ": '" + table.entity_ids[i] + "' vs '" +
                    kg.entity_ids[i] + "'");
    }
  }
}

}  // namespace moedti
