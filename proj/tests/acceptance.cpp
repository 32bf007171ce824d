// Acceptance bar: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "glosskit/class_mapping.hpp"
#include "glosskit/descriptions.hpp"
#include "glosskit/embedding_provider.hpp"
#include "glosskit/pipeline.hpp"
#include "glosskit/prompt.hpp"
#include "glosskit/similarity.hpp"
#include "glosskit/wordnet.hpp"
#include "glosskit/zsic.hpp"
#include "oracles.hpp"

using namespace glosskit;
namespace fs = std::filesystem;

namespace {

// Collects the first few failures of a criterion.
struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok && problems.size() < 5) problems.push_back(what);
  }
  bool ok() const { return problems.empty(); }
};

SkbGraph toy_graph() {
  std::ifstream in(oracle::fixture("toy_skb.jsonl"));
  return load_skb(in);
}

std::vector<ClassMapping> toy_mappings(const SkbGraph& g) {
  std::ifstream in(oracle::fixture("classes.jsonl"));
  return map_dataset(g, read_class_specs(in)).mappings;
}

EmbeddingVector random_vec(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return EmbeddingVector(std::move(v));
}

std::string describe(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

// Runs a chain of subcommands into a fresh directory.
PipelineConfig run_chain(const std::string& name, const std::vector<std::string>& subs, Check& c) {
  auto cfg = PipelineConfig::load(oracle::fixture("toy.conf"));
  cfg.output_dir = oracle::scratch_dir(name).string();
  for (const auto& sub : subs) {
    std::ostringstream out;
    const int status = run_subcommand(sub, cfg, {}, out);
    c.expect(status == 0, sub + " exited " + std::to_string(status));
    if (sub == "import-wordnet") {
      cfg.skb = cfg.output_path("skb.jsonl").string();
      cfg.wordnet_dir.clear();
    }
  }
  return cfg;
}

std::map<std::string, double> per_class_accuracy(const fs::path& report, double& overall) {
  std::map<std::string, double> out;
  std::istringstream in(oracle::slurp(report));
  std::string line;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["record"] == "summary") overall = j["top1_accuracy"];
    if (j["record"] == "class") out[j["class_id"]] = j["accuracy"];
  }
  return out;
}

// --- criteria ---------------------------------------------------------------

Check wordnet_fixture() {
  Check c;
  std::ifstream data(oracle::fixture("wordnet/data.noun"));
  std::ifstream index(oracle::fixture("wordnet/index.noun"));
  const auto g = wordnet::import_wordnet(data, index);
  c.expect(g.size() == 20, "expected 20 synsets, got " + std::to_string(g.size()));
  c.expect(g.lemma_index().size() == 12, "expected 12 indexed lemmas");
  c.expect(!g.frequency_unreliable(), "index present but order flagged unreliable");

  const auto& dog = g.at("00004000-n");
  c.expect(dog.lemmas == std::vector<std::string>{"dog", "domestic_dog", "canis_familiaris"}, "dog lemmas");
  c.expect(dog.gloss == "a member of the genus Canis that has been domesticated by man since prehistoric times",
           "dog gloss");
  c.expect(dog.examples == std::vector<std::string>{"the dog barked all night"}, "dog examples");
  c.expect(dog.hypernym_ids == std::vector<std::string>{"00003000-n"}, "dog hypernyms");
  const auto& puppy = g.at("00006000-n");
  c.expect(puppy.hypernym_ids == std::vector<std::string>{"00004000-n", "00021000-n"}, "puppy hypernyms");
  c.expect(puppy.examples.size() == 2, "puppy examples");
  c.expect(g.at("00003000-n").lemmas == std::vector<std::string>{"animal", "beast", "fauna"}, "animal lemmas");
  c.expect(g.at("00001740-n").hypernym_ids.empty(), "entity is a root");
  const auto crane = g.senses("crane");
  c.expect(std::vector<std::string>(crane.begin(), crane.end()) ==
               std::vector<std::string>{"00013000-n", "00008000-n"},
           "crane sense order");
  const auto ray = g.senses("ray");
  c.expect(std::vector<std::string>(ray.begin(), ray.end()) == std::vector<std::string>{"00014000-n", "00010000-n"},
           "ray sense order");

  std::ostringstream first;
  write_skb(first, g);
  std::istringstream back(first.str());
  std::ostringstream second;
  write_skb(second, load_skb(back));
  c.expect(first.str() == second.str(), "export -> load -> export is not byte-identical");
  c.expect(first.str() == oracle::slurp(oracle::fixture("toy_skb.jsonl")), "export differs from frozen fixture");
  return c;
}

Check similarity_oracles() {
  Check c;
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 200; ++trial) {
    const auto synsets = oracle::random_dag(rng, 50);
    const auto g = SkbGraph::build(synsets);
    oracle::Closure closure(synsets);
    std::vector<std::string> ids;
    for (const auto& s : synsets) ids.push_back(s.id);
    for (const auto& a : ids) {
      for (const auto& b : ids) {
        const double w = wup_similarity(g, a, b);
        const double p = path_similarity(g, a, b);
        c.expect(std::abs(w - closure.wup(a, b)) <= 1e-12, "wup(" + a + "," + b + ") off in trial " + std::to_string(trial));
        c.expect(std::abs(p - closure.path(a, b)) <= 1e-12, "path(" + a + "," + b + ") off in trial " + std::to_string(trial));
      }
    }
    for (const auto metric : {Metric::WuPalmer, Metric::Path}) {
      const auto m = build_similarity_matrix(g, ids, metric);
      for (std::size_t i = 0; i < m.size(); ++i) {
        c.expect(m.at(i, i) == 1.0, "diagonal not 1");
        for (std::size_t j = 0; j < m.size(); ++j) {
          c.expect(m.at(i, j) == m.at(j, i), "matrix not symmetric");
          c.expect(m.at(i, j) > 0.0 && m.at(i, j) <= 1.0, "entry outside (0, 1]");
        }
      }
    }
  }
  return c;
}

Check selection_oracle() {
  Check c;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  std::uniform_int_distribution<int> n_pick(0, 8);
  std::uniform_real_distribution<double> lambda_pick(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = oracle::random_matrix(rng, size(rng), trial % 2 == 0);
    // Half the matrices run the defaults λ=0.5, N=5.
    const bool defaults = trial % 4 < 2;
    const double lambda = defaults ? 0.5 : lambda_pick(rng);
    const std::size_t n = defaults ? 5 : static_cast<std::size_t>(n_pick(rng));
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto got = select_contrastive_targets(m, i, lambda, n);
      c.expect(got == oracle::select_targets(m, i, lambda, n), "trial " + std::to_string(trial) + " row " + std::to_string(i));
      c.expect(std::find(got.begin(), got.end(), i) == got.end(), "self selected");
      c.expect(got.size() <= n, "more than N targets");
    }
  }
  const EnsembleConfig defaults;
  c.expect(defaults.lambda == 0.5 && defaults.top_n == 5 && defaults.k == 4, "defaults are not λ=0.5, N=5, k=4");
  return c;
}

Check ensemble_counts() {
  Check c;
  const auto graph = toy_graph();
  const auto mappings = toy_mappings(graph);
  c.expect(mappings.size() == 10, "toy class list does not map to 10 classes");
  PromptBuilder prompts(load_exemplars(default_exemplar_path()));
  MockBackend backend;
  GenerationContext ctx{graph, mappings, prompts, backend};
  ctx.seed = 7;
  const EnsembleConfig config;  // defaults
  const auto matrix = build_class_matrix(graph, mappings, Metric::WuPalmer);
  const auto normal = generate_normal_ensemble(ctx, config);
  const auto contrastive = generate_contrastive(ctx, matrix, config);
  std::vector<std::string> ids;
  for (const auto& m : mappings) ids.push_back(m.class_id);
  const auto combined = combine_ensembles(ids, normal, contrastive);

  std::size_t full = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::size_t qualifying = 0;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j != i && matrix.at(i, j) >= config.lambda) ++qualifying;
    }
    const auto selected = oracle::select_targets(matrix, i, config.lambda, 5);
    const std::size_t expected = qualifying >= 5 ? 70 : 50 + 4 * selected.size();
    if (qualifying >= 5) ++full;
    c.expect(combined[i].records.size() == expected,
             ids[i] + ": " + std::to_string(combined[i].records.size()) + " records, expected " +
                 std::to_string(expected));
  }
  c.expect(full >= 2, "fixture has too few classes with 5 qualifying neighbors");
  return c;
}

Check silver_determinism() {
  Check c;
  const auto graph = toy_graph();
  const auto mappings = toy_mappings(graph);
  PromptBuilder prompts(load_exemplars(default_exemplar_path()));
  std::string runs[2];
  for (auto& text : runs) {
    MockBackend backend;
    GenerationContext ctx{graph, mappings, prompts, backend};
    ctx.seed = 7;
    const auto silver = build_silver(ctx);
    std::set<std::string> classes;
    for (const auto& r : silver) {
      classes.insert(r.class_id);
      c.expect(r.temperature == 0.0 && r.num_generations == 1, "silver record is not greedy");
    }
    c.expect(silver.size() == mappings.size() && classes.size() == mappings.size(), "not one record per class");
    std::ostringstream out;
    write_descriptions(out, silver);
    text = out.str();
  }
  c.expect(runs[0] == runs[1], "silver output differs between runs");
  return c;
}

Check crane_disambiguation() {
  Check c;
  const auto graph = toy_graph();
  const auto mappings = toy_mappings(graph);
  const ClassMapping* bird = nullptr;
  const ClassMapping* machine = nullptr;
  for (const auto& m : mappings) {
    if (m.class_id == "c04") bird = &m;
    if (m.class_id == "c05") machine = &m;
  }
  if (!bird || !machine) {
    c.expect(false, "crane classes missing");
    return c;
  }
  c.expect(bird->label == machine->label, "fixture labels differ");
  c.expect(bird->synset && machine->synset && *bird->synset != *machine->synset, "crane synsets not distinct");
  PromptBuilder prompts(load_exemplars(default_exemplar_path()));
  c.expect(prompts.normal_prompt(build_semantic_payload(graph, *bird)) !=
               prompts.normal_prompt(build_semantic_payload(graph, *machine)),
           "crane prompts identical");

  const auto cfg = run_chain("acceptance-crane", {"eval"}, c);
  double overall = 0;
  const auto acc = per_class_accuracy(cfg.output_path("report.jsonl"), overall);
  c.expect(acc.contains("c04") && acc.at("c04") == 1.0, "crane (bird) accuracy below 1.0");
  c.expect(acc.contains("c05") && acc.at("c05") == 1.0, "crane (machine) accuracy below 1.0");
  return c;
}

Check classifier_properties() {
  Check c;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);

  std::vector<ClassPrototype> protos;
  for (int k = 0; k < 12; ++k) {
    const std::vector<EmbeddingVector> e{random_vec(rng, 16), random_vec(rng, 16)};
    protos.push_back(make_prototype("k" + std::to_string(k), e));
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const auto v = random_vec(rng, 16);
    std::vector<double> scaled(v.values().begin(), v.values().end());
    const double s = scale(rng);
    for (auto& x : scaled) x *= s;
    c.expect(classify(protos, v).class_id == classify(protos, EmbeddingVector(scaled)).class_id,
             "argmax changed under scaling in trial " + std::to_string(trial));
  }

  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EmbeddingVector> ensemble;
    for (int i = 0; i < 2 + trial % 40; ++i) ensemble.push_back(random_vec(rng, 12));
    const auto a = class_prototype(ensemble);
    std::shuffle(ensemble.begin(), ensemble.end(), rng);
    const auto b = class_prototype(ensemble);
    for (std::size_t i = 0; i < a.dim(); ++i) c.expect(std::abs(a[i] - b[i]) <= 1e-12, "prototype depends on order");
  }

  const auto check_eval = [&](const std::vector<ClassPrototype>& ps, const std::vector<LabeledImage>& images,
                              const std::string& tag) {
    const auto r = evaluate(ps, images);
    const auto expected = oracle::recount(ps, images);
    c.expect(r.correct == expected.correct && r.confusion == expected.confusion, tag + ": evaluate != recount");
    c.expect(r.total == images.size(), tag + ": total");
    for (const auto& [gold, row] : r.confusion) {
      std::size_t sum = 0;
      for (const auto& [_, n] : row) sum += n;
      const auto n_gold = static_cast<std::size_t>(
          std::count_if(images.begin(), images.end(), [&](const auto& i) { return i.gold == gold; }));
      c.expect(sum == n_gold, tag + ": confusion row " + gold + " does not sum to its image count");
    }
  };

  // Hand fixtures.
  std::vector<ClassPrototype> axes;
  std::vector<LabeledImage> images;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> e(3, 0.0);
    e[k] = 1.0;
    axes.push_back({"a" + std::to_string(k), EmbeddingVector(e), 1});
    images.push_back({"i" + std::to_string(k), EmbeddingVector(e), "a" + std::to_string(k)});
  }
  check_eval(axes, images, "axes");
  images[2].vector = EmbeddingVector({0, 1, 0});
  check_eval(axes, images, "swapped");
  const std::vector<ClassPrototype> tied{{"b", EmbeddingVector({1, 0}), 1}, {"a", EmbeddingVector({0, 1}), 1}};
  check_eval(tied, {{"t", EmbeddingVector({1, 1}), "a"}}, "tie");

  // Random fixtures.
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabeledImage> random_images;
    for (int i = 0; i < 120; ++i) {
      random_images.push_back({"r" + std::to_string(i), random_vec(rng, 16), "k" + std::to_string(i % 12)});
    }
    check_eval(protos, random_images, "random " + std::to_string(trial));
  }

  // The toy pipeline's own prototypes and images.
  {
    auto cfg = PipelineConfig::load(oracle::fixture("toy.conf"));
    const auto graph = toy_graph();
    const auto mappings = toy_mappings(graph);
    std::vector<std::string> ids;
    for (const auto& m : mappings) ids.push_back(m.class_id);
    AlignedMockProvider provider(ids, cfg.embed_dim, cfg.mock_noise, *cfg.seed);
    std::vector<ClassPrototype> toy_protos;
    std::vector<LabeledImage> toy_images;
    for (const auto& id : ids) {
      std::vector<EmbedItem> texts;
      for (int i = 0; i < 6; ++i) texts.push_back({id + "/t" + std::to_string(i), "text " + std::to_string(i), "", id, false});
      toy_protos.push_back(make_prototype(id, embed_texts(provider, texts)));
      std::vector<EmbedItem> imgs;
      for (int i = 0; i < 4; ++i) imgs.push_back({id + "/img" + std::to_string(i), "", id + "/img" + std::to_string(i), id, true});
      const auto vs = embed_images(provider, imgs);
      for (std::size_t i = 0; i < vs.size(); ++i) toy_images.push_back({imgs[i].id, vs[i], id});
    }
    check_eval(toy_protos, toy_images, "toy");
  }
  return c;
}

Check end_to_end() {
  Check c;
  const std::vector<std::string> chain{"import-wordnet", "map-classes", "simmatrix", "gen-normal",
                                       "gen-contrastive", "prototypes", "eval"};
  const auto a = run_chain("acceptance-e2e-a", chain, c);
  const auto b = run_chain("acceptance-e2e-b", chain, c);
  double acc_a = -1, acc_b = -1;
  per_class_accuracy(a.output_path("report.jsonl"), acc_a);
  per_class_accuracy(b.output_path("report.jsonl"), acc_b);
  std::ostringstream msg;
  msg << "top-1 accuracy " << acc_a;
  c.expect(acc_a == 1.0, msg.str());
  for (const char* f : {"skb.jsonl", "mapping.jsonl", "simmatrix.txt", "descriptions_normal.jsonl",
                        "descriptions_contrastive.jsonl", "prototypes.emb", "report.jsonl"}) {
    c.expect(oracle::slurp(a.output_path(f)) == oracle::slurp(b.output_path(f)), std::string(f) + " differs between runs");
  }
  return c;
}

struct Criterion {
  std::string name;
  std::function<Check()> run;
  double limit_seconds;  // 0: no limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"wordnet-fixture-parse-and-roundtrip", wordnet_fixture, 1.0},
      {"similarity-matches-brute-force-oracles", similarity_oracles, 30.0},
      {"contrastive-selection-matches-oracle", selection_oracle, 10.0},
      {"ensemble-count-70-per-class", ensemble_counts, 0.0},
      {"silver-one-per-class-deterministic", silver_determinism, 0.0},
      {"crane-senses-disambiguated", crane_disambiguation, 0.0},
      {"classifier-properties", classifier_properties, 0.0},
      {"end-to-end-mock-run", end_to_end, 10.0},
  };
  int failed = 0;
  for (const auto& crit : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Check result;
    try {
      result = crit.run();
    } catch (const std::exception& e) {
      result.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (crit.limit_seconds > 0 && seconds >= crit.limit_seconds) {
      result.expect(false, "took " + std::to_string(seconds) + " s, limit " + std::to_string(crit.limit_seconds) + " s");
    }
    std::ostringstream line;
    line << (result.ok() ? "PASS " : "FAIL ") << crit.name << " (" << std::fixed;
    line.precision(3);
    line << seconds << " s)";
    if (!result.ok()) line << ": " << describe(result.problems);
    std::cout << line.str() << std::endl;
    if (!result.ok()) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
