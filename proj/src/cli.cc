#include "lmgnn/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lmgnn/checkpoint.hpp"
#include "lmgnn/config.hpp"
#include "lmgnn/errors.hpp"
#include "lmgnn/pipeline.hpp"

namespace lmgnn {
namespace {

bool non_empty_dir(const std::filesystem::path& dir) {
  return std::filesystem::exists(dir) && !std::filesystem::is_empty(dir);
}

struct LoadedModel {
  nlohmann::json meta;
  std::unique_ptr<LmGnnModel> model;
};

LoadedModel load_model(const std::filesystem::path& checkpoint, const HeteroGraph& graph) {
  Checkpoint ck = load_checkpoint(checkpoint);
  LoadedModel out;
  out.meta = ck.meta;
  try {
    const auto counts = ck.meta.at("node_counts").get<std::vector<NodeId>>();
    const std::vector<NodeId> have(graph.node_counts().begin(), graph.node_counts().end());
    LMGNN_CHECK(counts == have, ConfigError, "checkpoint node counts do not match the graph");
    LMGNN_CHECK(ck.meta.at("num_relations").get<std::int32_t>() == graph.num_relations(), ConfigError,
                "checkpoint relation count does not match the graph");
    LMGNN_CHECK(ck.meta.at("num_node_classes").get<std::int32_t>() == graph.num_node_classes() &&
                    ck.meta.at("num_edge_classes").get<std::int32_t>() == graph.num_edge_classes(),
                ConfigError, "checkpoint class counts do not match the graph");
    out.model = std::make_unique<LmGnnModel>(graph, ck.vocab, model_config_from_json(ck.meta.at("model")), 0);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(checkpoint.string() + ": bad manifest meta: " + e.what());
  }
  try {
    assign_params(out.model->all_params(), ck);
  } catch (const LoadError& e) {
    throw ConfigError(std::string("checkpoint does not fit the graph: ") + e.what());
  }
  return out;
}

Split parse_eval_split(const std::string& name) {
  const Split s = parse_split(name);
  LMGNN_CHECK(s == Split::kTrain || s == Split::kValid || s == Split::kTest, ConfigError,
              "split must be train, valid or test");
  return s;
}

}  // namespace

void cmd_synth(const SyntheticSpec& spec, const std::filesystem::path& out_dir, bool force) {
  LMGNN_CHECK(force || !non_empty_dir(out_dir), ConfigError,
              out_dir.string() << " exists and is not empty (use --force)");
  try {
    const auto generated = generate_synthetic(spec);
    save_graph(generated.graph, out_dir);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

EvalReport cmd_train(const std::filesystem::path& config_path, const TrainOverrides& overrides) {
  RunConfig config = load_run_config(config_path);
  if (overrides.seed) config.train.seed = *overrides.seed;
  if (overrides.out_dir) config.train.out_dir = *overrides.out_dir;
  LMGNN_CHECK(!config.train.out_dir.empty(), ConfigError, "no output directory (key 'out_dir' or --out)");
  LMGNN_CHECK(overrides.force || !std::filesystem::exists(config.train.out_dir / "metrics.jsonl"),
              ConfigError, config.train.out_dir.string() << " holds a previous run (use --force)");

  HeteroGraph graph;
  try {
    graph = load_graph(config.graph_dir);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  std::vector<std::string> corpus;
  for (NodeId g = 0; g < graph.total_nodes(); ++g) corpus.push_back(graph.text(graph.node_ref(g)));
  LmGnnModel model(graph, Vocab::build(corpus), config.model, config.train.seed);
  mlm_pretrain(model, graph, config.mlm_steps, config.mlm_batch_size, config.train.learning_rate,
               config.train.seed);

  Trainer trainer(model, graph, config.train);
  try {
    trainer.validate_plan();
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  trainer.run();
  const bool encoder_mode = config.train.stages.back().kind == StageKind::kPreFineTuneLM;
  LMGNN_CHECK(!encoder_mode || config.train.task == Task::kLink, ConfigError,
              "a plan ending in PreFineTuneLM can only be evaluated on the link task");
  const EvalReport report = trainer.evaluate(Split::kTest, encoder_mode);
  std::ofstream(config.train.out_dir / "test_report.json", std::ios::trunc) << report.to_json().dump(2) << '\n';
  return report;
}

EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& graph_dir,
                    const std::string& task_flag, const std::string& split_flag) {
  const Task task = parse_task(task_flag);
  const Split split = parse_eval_split(split_flag);
  HeteroGraph graph;
  try {
    graph = load_graph(graph_dir);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  const LoadedModel loaded = load_model(checkpoint, graph);
  const std::string trained_for = loaded.meta.value("task", "");
  LMGNN_CHECK(trained_for == task_name(task), ConfigError,
              "checkpoint was trained for task '" << trained_for << "', not '" << task_flag << "'");
  const auto& model = *loaded.model;
  const std::size_t chunk = loaded.meta.value("inference_batch_size", std::size_t{256});
  const LinkEvalOptions link_options{.seed = loaded.meta.value("seed", std::uint64_t{0})};
  const Tensor text = encode_all_texts(model, graph, chunk);
  if (loaded.meta.value("mode", "gnn") == "encoder") {
    LMGNN_CHECK(task == Task::kLink, ConfigError, "encoder checkpoints only support the link task");
    return evaluate_link(graph, text, model.lm_decoder(), split, link_options);
  }
  const Tensor h = infer_embeddings(model, message_graph(graph, task), text);
  switch (task) {
    case Task::kLink: return evaluate_link(graph, h, model.link_decoder(), split, link_options);
    case Task::kNode: return evaluate_node(graph, h, model.node_head(), split);
    case Task::kEdge: return evaluate_edge(graph, h, model.edge_head(), split);
  }
  throw ContractError("unknown task");
}

void cmd_dump_embeddings(const std::filesystem::path& checkpoint,
                         const std::filesystem::path& graph_dir, const std::filesystem::path& out) {
  HeteroGraph graph;
  try {
    graph = load_graph(graph_dir);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  const LoadedModel loaded = load_model(checkpoint, graph);
  const auto& model = *loaded.model;
  const Task task = parse_task(loaded.meta.value("task", "link"));
  Tensor h = encode_all_texts(model, graph, loaded.meta.value("inference_batch_size", std::size_t{256}));
  if (loaded.meta.value("mode", "gnn") != "encoder") h = infer_embeddings(model, message_graph(graph, task), h);

  std::ofstream file(out, std::ios::trunc);
  LMGNN_CHECK(file.good(), ConfigError, out.string() << ": cannot write");
  char buf[32];
  for (NodeId g = 0; g < graph.total_nodes(); ++g) {
    const NodeRef n = graph.node_ref(g);
    file << graph.node_type_name(n.type) << '\t' << n.local;
    for (std::size_t c = 0; c < h.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", h.at(static_cast<std::size_t>(g), c));
      file << '\t' << buf;
    }
    file << '\n';
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Language-model + graph neural network training on text-attributed heterogeneous graphs"};
  app.require_subcommand(1);

  SyntheticSpec spec;
  std::string synth_out;
  bool synth_force = false;
  auto* synth = app.add_subcommand("synth", "Generate a planted-cluster graph directory");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", spec.seed, "Random seed");
  synth->add_flag("--force", synth_force, "Overwrite a non-empty directory");
  synth->add_option("--clusters", spec.clusters, "Number of planted clusters");
  synth->add_option("--nodes-per-type", spec.nodes_per_type, "Nodes of each type");
  synth->add_option("--intra", spec.intra_probability, "Edge probability within a cluster");
  synth->add_option("--inter", spec.inter_probability, "Edge probability across clusters");
  synth->add_option("--vocab", spec.vocabulary_size, "Vocabulary size");
  synth->add_option("--tokens", spec.tokens_per_node, "Tokens per node text");
  synth->add_option("--topic-share", spec.topic_share, "Share of cluster-topic tokens");

  std::string config_path, train_out;
  std::optional<std::uint64_t> train_seed;
  bool train_force = false;
  auto* train = app.add_subcommand("train", "Run a stage-wise training plan");
  train->add_option("--config", config_path, "key=value run configuration")->required();
  train->add_option("--seed", train_seed, "Override the configured seed");
  train->add_option("--out", train_out, "Override the configured output directory");
  train->add_flag("--force", train_force, "Overwrite a previous run");

  std::string eval_checkpoint, eval_graph, eval_task = "link", eval_split = "test", eval_out;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint directory")->required();
  eval->add_option("--graph", eval_graph, "Graph directory")->required();
  eval->add_option("--task", eval_task, "link, node or edge");
  eval->add_option("--split", eval_split, "train, valid or test");
  eval->add_option("--out", eval_out, "Also write the report to this file");

  std::string dump_checkpoint, dump_graph, dump_out;
  auto* dump = app.add_subcommand("dump-embeddings", "Write final-layer node embeddings as TSV");
  dump->add_option("--checkpoint", dump_checkpoint, "Checkpoint directory")->required();
  dump->add_option("--graph", dump_graph, "Graph directory")->required();
  dump->add_option("--out", dump_out, "Output TSV file")->required();

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*synth) {
      cmd_synth(spec, synth_out, synth_force);
    } else if (*train) {
      TrainOverrides o;
      o.seed = train_seed;
      if (!train_out.empty()) o.out_dir = train_out;
      o.force = train_force;
      out << cmd_train(config_path, o).to_json().dump(2) << '\n';
    } else if (*eval) {
      const auto text = cmd_eval(eval_checkpoint, eval_graph, eval_task, eval_split).to_json().dump(2);
      out << text << '\n';
      if (!eval_out.empty()) std::ofstream(eval_out, std::ios::trunc) << text << '\n';
    } else if (*dump) {
      cmd_dump_embeddings(dump_checkpoint, dump_graph, dump_out);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const LoadError& e) {
    err << "load error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace lmgnn
