// Command-line surface for the long-tail relation extraction pipeline:
// TransE pretraining, hierarchy construction, model training, held-out
// evaluation, attention inspection, class-embedding export, and synthetic
// corpus generation. Every subcommand accepts --config <file> and --seed;
// explicit flags override config values, which override built-in defaults.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relex/config.hpp"
#include "relex/data.hpp"
#include "relex/errors.hpp"
#include "relex/eval.hpp"
#include "relex/hierarchy.hpp"
#include "relex/kg.hpp"
#include "relex/model.hpp"
#include "relex/trainer.hpp"

namespace {

using namespace relex;

std::vector<size_t> parse_size_list(const std::string& text) {
  std::vector<size_t> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw_usage("bad integer list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw_usage("expected a comma-separated integer list");
  return out;
}

std::vector<std::string> load_relation_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open relation list " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  require_data(!out.empty(), "relation list " + path + " is empty");
  return out;
}

// flag > config > default resolution
struct Resolver {
  CLI::App* cmd = nullptr;
  Config cfg;

  void load(const std::string& config_path) {
    if (!config_path.empty()) cfg = Config::load(config_path);
  }
  uint64_t pick_u64(const std::string& flag, uint64_t v, const std::string& key,
                    uint64_t fallback) const {
    return cmd->count(flag) ? v : cfg.get_u64(key, fallback);
  }
  double pick_f64(const std::string& flag, double v, const std::string& key,
                  double fallback) const {
    return cmd->count(flag) ? v : cfg.get_f64(key, fallback);
  }
  std::string pick_str(const std::string& flag, const std::string& v, const std::string& key,
                       const std::string& fallback) const {
    return cmd->count(flag) ? v : cfg.get(key, fallback);
  }
  bool pick_bool(const std::string& flag, bool v, const std::string& key, bool fallback) const {
    return cmd->count(flag) ? v : cfg.get_bool(key, fallback);
  }
};

void write_train_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw_data("cannot write training log " + path);
  out << "epoch,split,loss,accuracy\n";
  char buf[64];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.loss);
    out << e.epoch << ',' << e.split << ',' << buf;
    if (e.accuracy >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.accuracy);
      out << ',' << buf << '\n';
    } else {
      out << ",\n";
    }
  }
}

int run(int argc, char** argv) {
  CLI::App app{"knowledge-aware long-tail relation extraction"};
  app.require_subcommand(1);

  // ---- transe-train ----
  auto* transe = app.add_subcommand("transe-train", "train translation embeddings on a kg");
  std::string tr_triples, tr_out, tr_config;
  uint64_t tr_dim = 50, tr_epochs = 500, tr_neg = 1, tr_norm = 2, tr_seed = 0;
  double tr_margin = 1.0, tr_lr = 0.01;
  transe->add_option("--triples", tr_triples, "tsv of head\\trelation\\ttail");
  transe->add_option("--out", tr_out, "output stem (<stem>.entities, <stem>.relations)");
  transe->add_option("--config", tr_config);
  transe->add_option("--dim", tr_dim);
  transe->add_option("--margin", tr_margin);
  transe->add_option("--norm", tr_norm, "1 or 2");
  transe->add_option("--lr", tr_lr);
  transe->add_option("--epochs", tr_epochs);
  transe->add_option("--neg", tr_neg, "negatives per positive");
  transe->add_option("--seed", tr_seed);

  // ---- hierarchy-build ----
  auto* hier = app.add_subcommand("hierarchy-build", "construct the hierarchy label graph");
  std::string hb_mode = "predefined", hb_relations, hb_embeddings, hb_triples, hb_out,
              hb_config, hb_k;
  uint64_t hb_layers = 3, hb_seed = 0;
  double hb_threshold = 0.5;
  hier->add_option("--mode", hb_mode, "predefined|kmeans|hc|amie");
  hier->add_option("--relations", hb_relations, "relation list, one per line");
  hier->add_option("--embeddings", hb_embeddings, "relation embedding file (kmeans/hc)");
  hier->add_option("--triples", hb_triples, "kg triples (amie)");
  hier->add_option("--out", hb_out);
  hier->add_option("--config", hb_config);
  hier->add_option("--layers", hb_layers, "total layers including the root");
  hier->add_option("--k", hb_k, "clusters per internal level, comma separated");
  hier->add_option("--threshold", hb_threshold, "pca confidence threshold (amie)");
  hier->add_option("--seed", hb_seed);

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a relation extraction model");
  std::string t_train, t_test, t_hierarchy, t_kg, t_words, t_attention = "katt",
              t_encoder = "pcnn", t_out, t_config, t_log;
  uint64_t t_seed = 0, t_epochs = 30, t_pretrain = 5, t_batch = 160, t_hidden = 230,
           t_word_dim = 300, t_pos_dim = 5, t_clamp = 50, t_gcn_dim = 0, t_kg_dim = 16;
  double t_lr = 0.1, t_dropout = -1.0;
  bool t_no_score_bias = false, t_freeze_words = false, t_no_accuracy = false;
  train->add_option("--train", t_train, "training corpus tsv");
  train->add_option("--test", t_test, "held-out corpus tsv (vocabulary only)");
  train->add_option("--hierarchy", t_hierarchy, "hierarchy file from hierarchy-build");
  train->add_option("--kg-embeddings", t_kg, "transe output stem (katt)");
  train->add_option("--word-vectors", t_words, "pretrained word embedding file");
  train->add_option("--attention", t_attention, "katt|att");
  train->add_option("--encoder", t_encoder, "cnn|pcnn");
  train->add_option("--out", t_out, "checkpoint path");
  train->add_option("--log", t_log, "training log csv (default <out>.log.csv)");
  train->add_option("--config", t_config);
  train->add_option("--seed", t_seed);
  train->add_option("--epochs", t_epochs);
  train->add_option("--pretrain-epochs", t_pretrain);
  train->add_option("--batch-size", t_batch);
  train->add_option("--lr", t_lr);
  train->add_option("--dropout", t_dropout, "default 0.5 cnn / 0.9 pcnn");
  train->add_option("--hidden", t_hidden);
  train->add_option("--word-dim", t_word_dim);
  train->add_option("--pos-dim", t_pos_dim);
  train->add_option("--clamp", t_clamp);
  train->add_option("--gcn-dim", t_gcn_dim, "0 keeps the kg dimension");
  train->add_option("--kg-dim", t_kg_dim, "query half-width for the att baseline");
  train->add_flag("--no-score-bias", t_no_score_bias);
  train->add_flag("--freeze-word-embeddings", t_freeze_words);
  train->add_flag("--no-accuracy-log", t_no_accuracy);

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "held-out evaluation of a checkpoint");
  std::string e_ckpt, e_test, e_metric = "pr", e_out, e_mode = "all", e_n = "100,200,300",
              e_k = "10,15,20", e_freq = "100,200", e_config;
  uint64_t e_seed = 0;
  eval_cmd->add_option("--checkpoint", e_ckpt);
  eval_cmd->add_option("--test", e_test, "held-out corpus tsv");
  eval_cmd->add_option("--metric", e_metric, "pr|patn|hits");
  eval_cmd->add_option("--out", e_out, "output csv");
  eval_cmd->add_option("--mode", e_mode, "one|two|all (patn; default runs every mode)");
  eval_cmd->add_option("--n", e_n, "patn cutoffs, comma separated");
  eval_cmd->add_option("--k", e_k, "hits cutoffs, comma separated");
  eval_cmd->add_option("--freq-threshold", e_freq, "training-count thresholds");
  eval_cmd->add_option("--config", e_config);
  eval_cmd->add_option("--seed", e_seed);

  // ---- inspect-attention ----
  auto* inspect = app.add_subcommand("inspect-attention", "dump per-layer attention weights");
  std::string i_ckpt, i_test, i_head, i_tail, i_relation, i_out, i_config;
  uint64_t i_seed = 0;
  inspect->add_option("--checkpoint", i_ckpt);
  inspect->add_option("--test", i_test);
  inspect->add_option("--head", i_head, "head entity of the bag");
  inspect->add_option("--tail", i_tail, "tail entity of the bag");
  inspect->add_option("--relation", i_relation, "relation whose chain to inspect");
  inspect->add_option("--out", i_out);
  inspect->add_option("--config", i_config);
  inspect->add_option("--seed", i_seed);

  // ---- export-class-embeddings ----
  auto* exportc =
      app.add_subcommand("export-class-embeddings", "write every node's class embedding");
  std::string x_ckpt, x_out, x_config;
  uint64_t x_seed = 0;
  exportc->add_option("--checkpoint", x_ckpt);
  exportc->add_option("--out", x_out);
  exportc->add_option("--config", x_config);
  exportc->add_option("--seed", x_seed);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a long-tail corpus with a matching kg");
  std::string s_out_train, s_out_test, s_out_triples, s_out_relations, s_config;
  uint64_t s_heads = 4, s_tails = 4, s_head_inst = 80, s_tail_inst = 8, s_bag = 2,
           s_vocab = 40, s_branching = 2, s_na = 0, s_seed = 0, s_len_min = 6, s_len_max = 10;
  double s_noise = 0.0, s_test_fraction = 0.25;
  synth->add_option("--out-train", s_out_train);
  synth->add_option("--out-test", s_out_test);
  synth->add_option("--out-triples", s_out_triples);
  synth->add_option("--out-relations", s_out_relations, "relation list for hierarchy-build");
  synth->add_option("--config", s_config);
  synth->add_option("--heads", s_heads);
  synth->add_option("--tails", s_tails);
  synth->add_option("--head-instances", s_head_inst);
  synth->add_option("--tail-instances", s_tail_inst);
  synth->add_option("--bag-size", s_bag);
  synth->add_option("--vocab", s_vocab);
  synth->add_option("--branching", s_branching);
  synth->add_option("--noise", s_noise);
  synth->add_option("--na-instances", s_na);
  synth->add_option("--test-fraction", s_test_fraction);
  synth->add_option("--len-min", s_len_min);
  synth->add_option("--len-max", s_len_max);
  synth->add_option("--seed", s_seed);

  CLI11_PARSE(app, argc, argv);

  if (transe->parsed()) {
    Resolver r{transe, {}};
    r.load(tr_config);
    TransEConfig cfg;
    cfg.dimension = r.pick_u64("--dim", tr_dim, "transe.dim", 50);
    cfg.margin = r.pick_f64("--margin", tr_margin, "transe.margin", 1.0);
    cfg.norm = static_cast<int>(r.pick_u64("--norm", tr_norm, "transe.norm", 2));
    cfg.learning_rate = r.pick_f64("--lr", tr_lr, "transe.lr", 0.01);
    cfg.epochs = r.pick_u64("--epochs", tr_epochs, "transe.epochs", 500);
    cfg.negatives_per_positive = r.pick_u64("--neg", tr_neg, "transe.neg", 1);
    cfg.seed = r.pick_u64("--seed", tr_seed, "seed", 0);
    const auto triples = r.pick_str("--triples", tr_triples, "transe.triples", "");
    const auto out = r.pick_str("--out", tr_out, "transe.out", "");
    if (triples.empty() || out.empty()) throw_usage("transe-train needs --triples and --out");

    auto store = TripleStore::load(triples);
    auto result = train_transe(store, cfg);
    result.table.save(out);
    const auto lp = link_prediction_eval(result.table, store, cfg.norm);
    std::printf(
        "entities=%zu relations=%zu facts=%zu final_loss=%.6f mean_rank=%.3f hits@10=%.3f\n",
        store.entity_count(), store.relation_count(), store.fact_count(),
        result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(), lp.mean_rank,
        lp.hits_at_10);
    return 0;
  }

  if (hier->parsed()) {
    Resolver r{hier, {}};
    r.load(hb_config);
    const auto mode = r.pick_str("--mode", hb_mode, "hierarchy.mode", "predefined");
    const auto out = r.pick_str("--out", hb_out, "hierarchy.out", "");
    if (out.empty()) throw_usage("hierarchy-build needs --out");
    const auto layers = r.pick_u64("--layers", hb_layers, "hierarchy.layers", 3);
    const auto seed = r.pick_u64("--seed", hb_seed, "seed", 0);

    HierarchyGraph graph;
    if (mode == "predefined") {
      const auto rel_path = r.pick_str("--relations", hb_relations, "hierarchy.relations", "");
      if (rel_path.empty()) throw_usage("predefined mode needs --relations");
      graph = parse_predefined(RelationVocab::from_names(load_relation_list(rel_path)));
    } else if (mode == "kmeans" || mode == "hc") {
      const auto rel_path = r.pick_str("--relations", hb_relations, "hierarchy.relations", "");
      const auto emb_path = r.pick_str("--embeddings", hb_embeddings, "hierarchy.embeddings", "");
      if (emb_path.empty()) throw_usage(mode + " mode needs --embeddings");
      auto emb = Embeddings::load(emb_path);
      std::vector<std::string> relations;
      if (!rel_path.empty()) {
        for (const auto& name : load_relation_list(rel_path)) {
          if (name != kNaRelation) relations.push_back(name);
        }
      } else {
        relations = emb.ids();
      }
      if (mode == "kmeans") {
        const auto k_text = r.pick_str("--k", hb_k, "hierarchy.k", "");
        if (k_text.empty()) throw_usage("kmeans mode needs --k (clusters per level)");
        graph = build_kmeans(relations, emb, layers, parse_size_list(k_text), seed);
      } else {
        graph = build_agglomerative(relations, emb, layers);
      }
    } else if (mode == "amie") {
      const auto triples = r.pick_str("--triples", hb_triples, "hierarchy.triples", "");
      if (triples.empty()) throw_usage("amie mode needs --triples");
      const auto threshold = r.pick_f64("--threshold", hb_threshold, "hierarchy.threshold", 0.5);
      graph = build_amie(TripleStore::load(triples), threshold);
    } else {
      throw_usage("unknown hierarchy mode '" + mode + "'");
    }
    graph.save(out);
    std::printf("nodes=%zu levels=%d\n", graph.node_count(), graph.levels());
    return 0;
  }

  if (train->parsed()) {
    Resolver r{train, {}};
    r.load(t_config);
    const auto train_path = r.pick_str("--train", t_train, "data.train", "");
    const auto test_path = r.pick_str("--test", t_test, "data.test", "");
    const auto hierarchy_path = r.pick_str("--hierarchy", t_hierarchy, "data.hierarchy", "");
    const auto kg_stem = r.pick_str("--kg-embeddings", t_kg, "data.kg_embeddings", "");
    const auto words_path = r.pick_str("--word-vectors", t_words, "data.word_vectors", "");
    const auto out = r.pick_str("--out", t_out, "train.out", "");
    const auto attention = r.pick_str("--attention", t_attention, "model.attention", "katt");
    const auto encoder = r.pick_str("--encoder", t_encoder, "model.encoder", "pcnn");
    const auto log_path = r.pick_str("--log", t_log, "train.log", "");
    if (train_path.empty() || out.empty()) throw_usage("train needs --train and --out");

    ModelConfig mc;
    if (encoder == "cnn") {
      mc.encoder.kind = EncoderKind::Cnn;
    } else if (encoder == "pcnn") {
      mc.encoder.kind = EncoderKind::Pcnn;
    } else {
      throw_usage("unknown encoder '" + encoder + "'");
    }
    if (attention == "katt") {
      mc.attention = AttentionKind::Katt;
    } else if (attention == "att") {
      mc.attention = AttentionKind::Att;
    } else {
      throw_usage("unknown attention '" + attention + "'");
    }
    mc.encoder.hidden = r.pick_u64("--hidden", t_hidden, "model.hidden", 230);
    const double dropout_default = mc.encoder.kind == EncoderKind::Cnn ? 0.5 : 0.9;
    const double dropout = r.pick_f64("--dropout", t_dropout, "model.dropout", dropout_default);
    mc.encoder.dropout = dropout < 0 ? dropout_default : dropout;
    mc.word_dim = r.pick_u64("--word-dim", t_word_dim, "model.word_dim", 300);
    mc.pos_dim = r.pick_u64("--pos-dim", t_pos_dim, "model.pos_dim", 5);
    mc.clamp = r.pick_u64("--clamp", t_clamp, "model.clamp", 50);
    mc.gcn_dim = r.pick_u64("--gcn-dim", t_gcn_dim, "model.gcn_dim", 0);
    mc.score_bias = !r.pick_bool("--no-score-bias", t_no_score_bias, "model.no_score_bias", false);
    mc.finetune_word_embeddings = !r.pick_bool("--freeze-word-embeddings", t_freeze_words,
                                               "model.freeze_word_embeddings", false);

    TrainConfig tc;
    tc.learning_rate = r.pick_f64("--lr", t_lr, "train.lr", 0.1);
    tc.batch_size = r.pick_u64("--batch-size", t_batch, "train.batch_size", 160);
    tc.epochs = r.pick_u64("--epochs", t_epochs, "train.epochs", 30);
    tc.pretrain_epochs = r.pick_u64("--pretrain-epochs", t_pretrain, "train.pretrain_epochs", 5);
    tc.seed = r.pick_u64("--seed", t_seed, "seed", 0);
    tc.log_accuracy =
        !r.pick_bool("--no-accuracy-log", t_no_accuracy, "train.no_accuracy_log", false);

    auto corpus = load_corpus(train_path, test_path);

    HierarchyGraph graph;
    if (!hierarchy_path.empty()) {
      graph = HierarchyGraph::load(hierarchy_path);
    } else {
      graph = parse_predefined(corpus.relations);
    }
    if (mc.attention == AttentionKind::Katt) {
      if (kg_stem.empty()) throw_usage("katt training needs --kg-embeddings");
      auto table = EmbeddingTable::load(kg_stem);
      init_node_vectors(graph, table.relations);
      mc.kg_dim = table.relations.dimension();
    } else {
      mc.kg_dim = r.pick_u64("--kg-dim", t_kg_dim, "model.kg_dim", 16);
    }

    auto model = Model::init(mc, corpus.relations, corpus.words, graph, tc.seed);
    if (!words_path.empty()) model.load_word_vectors(Embeddings::load(words_path));

    // effective configuration echoed into the checkpoint
    Config echo;
    echo.set("data.train", train_path);
    echo.set("data.test", test_path);
    echo.set("data.hierarchy", hierarchy_path);
    echo.set("data.kg_embeddings", kg_stem);
    echo.set("data.word_vectors", words_path);
    echo.set("model.attention", attention);
    echo.set("model.encoder", encoder);
    echo.set("model.hidden", std::to_string(mc.encoder.hidden));
    echo.set("model.dropout", std::to_string(mc.encoder.dropout));
    echo.set("model.word_dim", std::to_string(mc.word_dim));
    echo.set("model.pos_dim", std::to_string(mc.pos_dim));
    echo.set("model.clamp", std::to_string(mc.clamp));
    echo.set("model.kg_dim", std::to_string(mc.kg_dim));
    echo.set("model.gcn_dim", std::to_string(mc.gcn_dim));
    echo.set("model.score_bias", mc.score_bias ? "true" : "false");
    echo.set("train.lr", std::to_string(tc.learning_rate));
    echo.set("train.batch_size", std::to_string(tc.batch_size));
    echo.set("train.epochs", std::to_string(tc.epochs));
    echo.set("train.pretrain_epochs", std::to_string(tc.pretrain_epochs));
    echo.set("seed", std::to_string(tc.seed));

    Trainer trainer(model, corpus.train, tc);
    trainer.pretrain_encoder();
    trainer.train();
    trainer.save(out, echo.echo());
    write_train_log(trainer.log(), log_path.empty() ? out + ".log.csv" : log_path);
    std::printf("bags=%zu epochs=%zu final_loss=%.6f train_accuracy=%.4f\n",
                trainer.bags().size(), trainer.epochs_done(),
                trainer.log().empty() ? 0.0 : trainer.log().back().loss,
                trainer.train_accuracy());
    return 0;
  }

  if (eval_cmd->parsed()) {
    Resolver r{eval_cmd, {}};
    r.load(e_config);
    const auto ckpt = r.pick_str("--checkpoint", e_ckpt, "eval.checkpoint", "");
    const auto test_path = r.pick_str("--test", e_test, "data.test", "");
    const auto metric = r.pick_str("--metric", e_metric, "eval.metric", "pr");
    const auto out = r.pick_str("--out", e_out, "eval.out", "");
    const auto seed = r.pick_u64("--seed", e_seed, "seed", 0);
    if (ckpt.empty() || test_path.empty() || out.empty()) {
      throw_usage("eval needs --checkpoint, --test, and --out");
    }
    auto ck = load_checkpoint(ckpt);
    const auto test =
        map_instances(load_instance_file(test_path), ck.model.vocab, ck.model.words);
    const auto bags = build_eval_bags(test, ck.model.vocab);
    auto scorer = model_scorer(ck.model);

    if (metric == "pr") {
      const auto curve = pr_curve(score_records(bags, scorer, ck.model.vocab));
      write_pr_csv(curve, out);
      std::printf("records=%zu auc=%.6f\n", curve.points.size(), curve.auc);
    } else if (metric == "patn") {
      const auto cutoffs = parse_size_list(r.pick_str("--n", e_n, "eval.n", "100,200,300"));
      const auto mode_name = r.pick_str("--mode", e_mode, "eval.mode", "");
      std::vector<TestMode> modes;
      if (!mode_name.empty() && mode_name != "all") {
        modes.push_back(parse_test_mode(mode_name));
      } else {
        modes = {TestMode::One, TestMode::Two, TestMode::All};
      }
      std::vector<PrecisionAtN> rows;
      for (auto mode : modes) {
        rows.push_back(precision_at_n(bags, scorer, ck.model.vocab, mode, cutoffs, seed));
      }
      write_patn_csv(rows, out);
      for (const auto& row : rows) {
        std::printf("%s mean=%.4f\n", test_mode_name(row.mode).c_str(), row.mean);
      }
    } else if (metric == "hits") {
      const auto ks = parse_size_list(r.pick_str("--k", e_k, "eval.k", "10,15,20"));
      const auto thresholds =
          parse_size_list(r.pick_str("--freq-threshold", e_freq, "eval.freq_threshold", "100,200"));
      const auto records = score_records(bags, scorer, ck.model.vocab);
      std::vector<HitsCell> cells;
      for (size_t threshold : thresholds) {
        for (size_t k : ks) {
          cells.push_back({threshold, k, macro_hits_at_k(records, ck.model.vocab, threshold, k)});
        }
      }
      write_hits_csv(cells, out);
      for (const auto& c : cells) {
        std::printf("hits@%zu (<%zu train instances) = %.4f\n", c.k, c.freq_threshold, c.value);
      }
    } else {
      throw_usage("unknown metric '" + metric + "'");
    }
    return 0;
  }

  if (inspect->parsed()) {
    Resolver r{inspect, {}};
    r.load(i_config);
    const auto ckpt = r.pick_str("--checkpoint", i_ckpt, "eval.checkpoint", "");
    const auto test_path = r.pick_str("--test", i_test, "data.test", "");
    const auto head = r.pick_str("--head", i_head, "inspect.head", "");
    const auto tail = r.pick_str("--tail", i_tail, "inspect.tail", "");
    const auto relation = r.pick_str("--relation", i_relation, "inspect.relation", "");
    const auto out = r.pick_str("--out", i_out, "inspect.out", "");
    (void)i_seed;
    if (ckpt.empty() || test_path.empty() || head.empty() || tail.empty() || relation.empty() ||
        out.empty()) {
      throw_usage("inspect-attention needs --checkpoint --test --head --tail --relation --out");
    }
    auto ck = load_checkpoint(ckpt);
    const auto test =
        map_instances(load_instance_file(test_path), ck.model.vocab, ck.model.words);
    std::vector<Instance> bag;
    for (const auto& inst : test) {
      if (inst.head == head && inst.tail == tail) bag.push_back(inst);
    }
    require_data(!bag.empty(), "no test instances mention the pair (" + head + ", " + tail + ")");
    const size_t rel = ck.model.vocab.index_of(relation);
    const auto table = ck.model.class_table();
    const auto rows = ck.model.inspect(head + "|" + tail, bag, rel, table);
    write_attention_csv(rows, out);
    std::printf("instances=%zu rows=%zu\n", bag.size(), rows.size());
    return 0;
  }

  if (exportc->parsed()) {
    Resolver r{exportc, {}};
    r.load(x_config);
    const auto ckpt = r.pick_str("--checkpoint", x_ckpt, "eval.checkpoint", "");
    const auto out = r.pick_str("--out", x_out, "export.out", "");
    (void)x_seed;
    if (ckpt.empty() || out.empty()) {
      throw_usage("export-class-embeddings needs --checkpoint and --out");
    }
    auto ck = load_checkpoint(ckpt);
    export_class_embeddings(ck.model, out);
    std::printf("nodes=%zu\n", ck.model.graph.node_count());
    return 0;
  }

  if (synth->parsed()) {
    Resolver r{synth, {}};
    r.load(s_config);
    SynthConfig cfg;
    cfg.head_relations = r.pick_u64("--heads", s_heads, "synth.heads", 4);
    cfg.tail_relations = r.pick_u64("--tails", s_tails, "synth.tails", 4);
    cfg.instances_per_head = r.pick_u64("--head-instances", s_head_inst, "synth.head_instances", 80);
    cfg.instances_per_tail = r.pick_u64("--tail-instances", s_tail_inst, "synth.tail_instances", 8);
    cfg.instances_per_bag = r.pick_u64("--bag-size", s_bag, "synth.bag_size", 2);
    cfg.vocab_size = r.pick_u64("--vocab", s_vocab, "synth.vocab", 40);
    cfg.branching = r.pick_u64("--branching", s_branching, "synth.branching", 2);
    cfg.noise_rate = r.pick_f64("--noise", s_noise, "synth.noise", 0.0);
    cfg.na_train_instances = r.pick_u64("--na-instances", s_na, "synth.na_instances", 0);
    cfg.test_fraction = r.pick_f64("--test-fraction", s_test_fraction, "synth.test_fraction", 0.25);
    cfg.sent_len_min = r.pick_u64("--len-min", s_len_min, "synth.len_min", 6);
    cfg.sent_len_max = r.pick_u64("--len-max", s_len_max, "synth.len_max", 10);
    cfg.seed = r.pick_u64("--seed", s_seed, "seed", 0);
    const auto out_train = r.pick_str("--out-train", s_out_train, "synth.out_train", "");
    const auto out_test = r.pick_str("--out-test", s_out_test, "synth.out_test", "");
    const auto out_triples = r.pick_str("--out-triples", s_out_triples, "synth.out_triples", "");
    const auto out_relations =
        r.pick_str("--out-relations", s_out_relations, "synth.out_relations", "");
    if (out_train.empty()) throw_usage("synth needs --out-train");

    auto data = synth_longtail(cfg);
    save_corpus_split(data.corpus, false, out_train);
    if (!out_test.empty()) save_corpus_split(data.corpus, true, out_test);
    if (!out_triples.empty()) data.kg.save(out_triples);
    if (!out_relations.empty()) {
      std::ofstream rel_out(out_relations);
      if (!rel_out) throw_data("cannot write " + out_relations);
      for (const auto& name : data.corpus.relations.names) rel_out << name << '\n';
    }
    std::printf("train_instances=%zu test_instances=%zu relations=%zu facts=%zu\n",
                data.corpus.train.size(), data.corpus.test.size(),
                data.corpus.relations.names.size(), data.kg.fact_count());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const relex::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
