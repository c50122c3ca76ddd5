#include "lsinit/experiment.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "lsinit/error.hpp"

namespace lsinit {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception& e) {
        config_error(std::string("field '") + key + "': " + e.what());
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

SynthSpec parse_synth(const json& s) {
    SynthSpec spec;
    spec.class_count = get_or<std::size_t>(s, "class_count", spec.class_count);
    spec.dim = get_or<std::size_t>(s, "dim", spec.dim);
    spec.mean_layout = parse_mean_layout(get_or<std::string>(s, "mean_layout", std::string(to_string(spec.mean_layout))));
    spec.mean_scale = get_or<double>(s, "mean_scale", spec.mean_scale);
    spec.within_std = get_or<double>(s, "within_std", spec.within_std);
    spec.samples_per_class = get_or<std::size_t>(s, "samples_per_class", spec.samples_per_class);
    spec.test_samples_per_class = get_or<std::size_t>(s, "test_samples_per_class", spec.test_samples_per_class);
    spec.seed = get_or<std::uint64_t>(s, "seed", spec.seed);
    return spec;
}

json synth_to_json(const SynthSpec& s) {
    return {{"class_count", s.class_count},
            {"dim", s.dim},
            {"mean_layout", to_string(s.mean_layout)},
            {"mean_scale", s.mean_scale},
            {"within_std", s.within_std},
            {"samples_per_class", s.samples_per_class},
            {"test_samples_per_class", s.test_samples_per_class},
            {"seed", s.seed}};
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json metrics_to_json(const std::optional<CollapseMetrics>& m) {
    if (!m) return nullptr;
    return {{"nc1", m->nc1}, {"nc2", m->nc2}, {"nc3", m->nc3}, {"nc4", m->nc4}};
}

json record_to_json(const EvalRecord& r) {
    return {{"task_id", r.task_id},
            {"iteration", r.iteration},
            {"global_iteration", r.global_iteration},
            {"acc_pre", r.acc_pre},
            {"acc_new", r.acc_new},
            {"acc_old", optional_number(r.acc_old)},
            {"acc_all", r.acc_all},
            {"loss_new", r.loss_new},
            {"test_loss_new", r.test_loss_new},
            {"d_ls", optional_number(r.d_ls)},
            {"buffer_size", r.buffer_size}};
}

EvalRecord record_from_json(const json& j) {
    EvalRecord r;
    r.task_id = j.at("task_id").get<int>();
    r.iteration = j.at("iteration").get<std::size_t>();
    r.global_iteration = j.value("global_iteration", std::size_t{0});
    r.acc_pre = j.at("acc_pre").get<double>();
    r.acc_new = j.at("acc_new").get<double>();
    if (j.contains("acc_old") && !j["acc_old"].is_null()) r.acc_old = j["acc_old"].get<double>();
    r.acc_all = j.at("acc_all").get<double>();
    r.loss_new = j.value("loss_new", 0.0);
    r.test_loss_new = j.value("test_loss_new", 0.0);
    if (j.contains("d_ls") && !j["d_ls"].is_null()) r.d_ls = j["d_ls"].get<double>();
    r.buffer_size = j.value("buffer_size", std::size_t{0});
    return r;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

void ExperimentConfig::validate() const {
    if (initializers.empty()) config_error("at least one initializer is required");
    if (!synthetic && (train_path.empty() || test_path.empty()))
        config_error("data needs either 'synthetic' or both 'train' and 'test' paths");
    if (synthetic) synthetic->validate();
    train.validate();
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) config_error("config root must be an object");
    ExperimentConfig cfg;
    try {
        const json data = doc.value("data", json::object());
        if (data.contains("synthetic")) {
            cfg.synthetic = parse_synth(data["synthetic"]);
        } else {
            cfg.train_path = resolve(base_dir, get_or<std::string>(data, "train", ""));
            cfg.test_path = resolve(base_dir, get_or<std::string>(data, "test", ""));
        }
        if (doc.contains("pretrained_head"))
            cfg.pretrained_head = resolve(base_dir, doc["pretrained_head"].get<std::string>());

        const json sched = doc.value("schedule", json::object());
        cfg.schedule.pretrain_class_count = get_or(sched, "pretrain_class_count", cfg.schedule.pretrain_class_count);
        cfg.schedule.num_cl_tasks = get_or(sched, "num_cl_tasks", cfg.schedule.num_cl_tasks);
        cfg.schedule.classes_per_task = get_or(sched, "classes_per_task", cfg.schedule.classes_per_task);
        cfg.schedule.order_seed = get_or(sched, "order_seed", cfg.schedule.order_seed);

        const json tr = doc.value("train", json::object());
        TrainConfig& t = cfg.train;
        t.iterations_per_task = get_or(tr, "iterations_per_task", t.iterations_per_task);
        t.batch_size = get_or(tr, "batch_size", t.batch_size);
        t.learning_rate = get_or(tr, "learning_rate", t.learning_rate);
        t.weight_decay = get_or(tr, "weight_decay", t.weight_decay);
        t.loss.type = parse_loss_type(get_or<std::string>(tr, "loss", "ce"));
        t.loss.kappa = get_or(tr, "kappa", t.loss.kappa);
        t.loss.beta = get_or(tr, "beta", t.loss.beta);
        t.init.lambda = get_or(tr, "lambda", kDefaultRidgeLambda);
        t.eval_every = get_or(tr, "eval_every", t.eval_every);
        t.buffer_capacity = get_or(tr, "buffer_capacity", t.buffer_capacity);
        t.seed = get_or(tr, "seed", t.seed);
        t.pretrain = parse_pretrain_mode(get_or<std::string>(tr, "pretrain", "train"));
        t.pretrain_iterations = get_or(tr, "pretrain_iterations", t.pretrain_iterations);

        if (!doc.contains("initializers") || !doc["initializers"].is_array())
            config_error("'initializers' must be a non-empty array");
        for (const auto& name : doc["initializers"]) cfg.initializers.push_back(parse_init_kind(name.get<std::string>()));
        cfg.output_dir = resolve(base_dir, doc.value("output_dir", std::string("results")));
    } catch (const json::exception& e) {
        config_error(e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        config_error(e.what());
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ConfigError) throw;
        config_error(e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error(e.what());
    }
    return parse_config(doc, path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
    json data;
    if (c.synthetic)
        data["synthetic"] = synth_to_json(*c.synthetic);
    else
        data = {{"train", c.train_path.string()}, {"test", c.test_path.string()}};
    json inits = json::array();
    for (auto k : c.initializers) inits.push_back(to_string(k));
    const TrainConfig& t = c.train;
    json doc = {
        {"data", data},
        {"schedule",
         {{"pretrain_class_count", c.schedule.pretrain_class_count},
          {"num_cl_tasks", c.schedule.num_cl_tasks},
          {"classes_per_task", c.schedule.classes_per_task},
          {"order_seed", c.schedule.order_seed}}},
        {"train",
         {{"iterations_per_task", t.iterations_per_task},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"weight_decay", t.weight_decay},
          {"loss", to_string(t.loss.type)},
          {"kappa", t.loss.kappa},
          {"beta", t.loss.beta},
          {"lambda", t.init.lambda},
          {"eval_every", t.eval_every},
          {"buffer_capacity", t.buffer_capacity},
          {"seed", t.seed},
          {"pretrain", to_string(t.pretrain)},
          {"pretrain_iterations", t.pretrain_iterations}}},
        {"initializers", inits},
    };
    if (c.pretrained_head) doc["pretrained_head"] = c.pretrained_head->string();
    return doc;
}

std::uint64_t config_fingerprint(const ExperimentConfig& config) {
    // FNV-1a over the canonical dump; output_dir is deliberately not part of it.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(config).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    config.validate();
    FeatureDataset train;
    FeatureDataset test;
    if (config.synthetic) {
        std::tie(train, test) = gen_stream(*config.synthetic);
    } else {
        train = load_features(config.train_path, format_from_path(config.train_path), Split::train);
        test = load_features(config.test_path, format_from_path(config.test_path), Split::test);
    }

    ExperimentOutput out;
    out.schedule = partition_tasks(train, config.schedule.pretrain_class_count, config.schedule.num_cl_tasks,
                                   config.schedule.classes_per_task, config.schedule.order_seed);

    std::optional<ClassifierHead> pretrained;
    if (config.pretrained_head) {
        pretrained = load_head(*config.pretrained_head);
    } else {
        // Shared across initializers so every run starts from the same head.
        TaskSchedule pre_only = out.schedule;
        pre_only.tasks.resize(1);
        pre_only.class_order.resize(pre_only.tasks[0].classes.size());
        FeatureDataset pre_train;
        pre_train.dim = train.dim;
        Task pre_task{1, {}, {}};
        for (std::size_t k = 0; k < pre_only.class_order.size(); ++k) pre_task.classes.push_back(static_cast<int>(k));
        for (std::size_t i : out.schedule.tasks[0].indices) {
            pre_task.indices.push_back(pre_train.size());
            pre_train.labels.push_back(pre_only.head_index(train.labels[i]));
            auto row = train.row(i);
            pre_train.features.insert(pre_train.features.end(), row.begin(), row.end());
        }
        pretrained = fit_pretrain_head(pre_train, pre_task, config.train);
    }

    const std::uint64_t fingerprint = config_fingerprint(config);
    for (InitKind kind : config.initializers) {
        TrainConfig tc = config.train;
        tc.init.kind = kind;
        ExperimentResult r = run_continual(tc, train, test, out.schedule, pretrained);
        r.log.config_fingerprint = fingerprint;
        out.runs.push_back(std::move(r));
    }
    return out;
}

json gain_to_json(const GainReport& report) {
    json tasks = json::array();
    for (const auto& g : report.tasks)
        tasks.push_back({{"task_id", g.task_id},
                         {"threshold", g.threshold},
                         {"reference_iterations", g.reference_iterations},
                         {"test_iterations", g.test_iterations},
                         {"gain", g.gain},
                         {"reachable", g.reachable}});
    return {{"per_task", tasks}, {"mean", report.mean_gain}};
}

json results_to_json(const ExperimentConfig& config, const ExperimentOutput& output) {
    json runs = json::array();
    for (const auto& run : output.runs) {
        json records = json::array();
        for (const auto& r : run.log.records) records.push_back(record_to_json(r));
        json tasks = json::array();
        for (const auto& t : run.tasks)
            tasks.push_back({{"task_id", t.task_id},
                             {"optimizer_steps", t.optimizer_steps},
                             {"max_buffer_size", t.max_buffer_size},
                             {"buffer_size_after", t.buffer_size_after},
                             {"d_ls_boundary", optional_number(t.d_ls_boundary)},
                             {"d_ls_final", optional_number(t.d_ls_final)},
                             {"nc_boundary", metrics_to_json(t.nc_boundary)},
                             {"nc_final", metrics_to_json(t.nc_final)}});
        json averages = {{"pre", average_accuracy(run.log, AccuracyField::pre)},
                         {"new", average_accuracy(run.log, AccuracyField::new_task)},
                         {"all", average_accuracy(run.log, AccuracyField::all)}};
        try {
            averages["old"] = average_accuracy(run.log, AccuracyField::old);
        } catch (const Error&) {
            averages["old"] = nullptr;
        }
        runs.push_back({{"init", to_string(run.init)},
                        {"config_fingerprint", hex64(run.log.config_fingerprint)},
                        {"records", records},
                        {"tasks", tasks},
                        {"average_accuracy", averages}});
    }

    json schedule = json::array();
    for (const auto& t : output.schedule.tasks) schedule.push_back({{"task_id", t.task_id}, {"classes", t.classes}});

    json doc = {{"config", config_to_json(config)},
                {"config_fingerprint", hex64(config_fingerprint(config))},
                {"schedule", schedule},
                {"runs", runs}};

    const ExperimentResult* reference = nullptr;
    for (const auto& run : output.runs)
        if (run.init == InitKind::random) reference = &run;
    if (reference && output.runs.size() >= 2) {
        json gains = json::object();
        for (const auto& run : output.runs)
            if (&run != reference) gains[std::string(to_string(run.init))] = gain_to_json(efficiency_gain(reference->log, run.log));
        doc["efficiency_gain"] = gains;
    }
    return doc;
}

void write_curves_csv(std::ostream& os, const ExperimentOutput& output) {
    os << "init,task,iteration,acc_pre,acc_new,acc_old,acc_all,loss_new\n";
    for (const auto& run : output.runs)
        for (const auto& r : run.log.records) {
            os << to_string(run.init) << ',' << r.task_id << ',' << r.iteration << ',' << fmt_number(r.acc_pre) << ','
               << fmt_number(r.acc_new) << ',' << (r.acc_old ? fmt_number(*r.acc_old) : std::string()) << ','
               << fmt_number(r.acc_all) << ',' << fmt_number(r.loss_new) << '\n';
        }
}

void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output) {
    std::filesystem::create_directories(config.output_dir);
    {
        std::ofstream out(config.output_dir / "results.json", std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write results.json");
        out << results_to_json(config, output).dump(2) << '\n';
    }
    std::ofstream csv(config.output_dir / "curves.csv", std::ios::trunc);
    if (!csv) throw Error(ErrorKind::IoError, "cannot write curves.csv");
    write_curves_csv(csv, output);
}

std::vector<NamedLog> logs_from_results(const json& results) {
    std::vector<NamedLog> out;
    try {
        for (const auto& run : results.at("runs")) {
            NamedLog named;
            named.init = run.at("init").get<std::string>();
            for (const auto& r : run.at("records")) named.log.records.push_back(record_from_json(r));
            out.push_back(std::move(named));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("malformed results document: ") + e.what());
    }
    return out;
}

namespace {

std::optional<double> first_acc_new(const EvalLog& log, int task) {
    for (const auto& r : log.records)
        if (r.task_id == task && r.iteration == 0) return r.acc_new;
    return std::nullopt;
}

json pair_report(const NamedLog& ref, const NamedLog& test) {
    json doc = {{"reference", ref.init}, {"test", test.init}};
    doc["efficiency_gain"] = gain_to_json(efficiency_gain(ref.log, test.log));
    json deltas = json::array();
    std::set<int> tasks;
    for (const auto& r : ref.log.records)
        if (r.task_id > 1) tasks.insert(r.task_id);
    for (int t : tasks) {
        const auto a = first_acc_new(ref.log, t);
        const auto b = first_acc_new(test.log, t);
        if (a && b) deltas.push_back({{"task_id", t}, {"reference", *a}, {"test", *b}, {"delta", *b - *a}});
    }
    doc["iteration0_acc_new"] = deltas;
    return doc;
}

} // namespace

json compare_results(const json& reference, const json& test) {
    const auto ref_logs = logs_from_results(reference);
    const auto test_logs = logs_from_results(test);
    if (ref_logs.empty() || test_logs.empty()) throw Error(ErrorKind::EmptyLog, "results contain no runs");

    json comparisons = json::array();
    bool paired = false;
    for (const auto& t : test_logs)
        for (const auto& r : ref_logs)
            if (r.init == t.init) {
                comparisons.push_back(pair_report(r, t));
                paired = true;
            }
    if (!paired)
        for (const auto& t : test_logs) comparisons.push_back(pair_report(ref_logs.front(), t));
    return {{"comparisons", comparisons}};
}

namespace cli {

void report_error(std::string_view kind, std::string_view message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

int cmd_run(const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& output_override) {
    ExperimentConfig config;
    try {
        config = load_config(config_path);
        if (output_override) config.output_dir = *output_override;
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return 1;
    }
    try {
        const ExperimentOutput output = run_experiment(config);
        write_outputs(config, output);
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error("RuntimeError", e.what());
        return 2;
    }
    return 0;
}

int cmd_compare(const std::filesystem::path& reference, const std::filesystem::path& test, std::ostream& out) {
    try {
        auto read = [](const std::filesystem::path& p) {
            std::ifstream in(p);
            if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
            try {
                return json::parse(in);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::ConfigError, p.string() + ": " + e.what());
            }
        };
        out << compare_results(read(reference), read(test)).dump(2) << '\n';
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return 1;
    }
    return 0;
}

int cmd_synth(const SynthArgs& args, std::ostream& out) {
    try {
        args.spec.validate();
        auto [train, test] = gen_stream(args.spec);
        for (const auto& p : {args.train_out, args.test_out}) {
            std::error_code ec;
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
        }
        save_features(args.train_out, train, format_from_path(args.train_out));
        save_features(args.test_out, test, format_from_path(args.test_out));

        std::vector<std::size_t> all(train.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        const ClassStatistics stats = compute_stats(train, all);

        const Matrix means = gen_class_means(args.spec);
        Matrix centered = means.transposed();  // C x d
        for (std::size_t k = 0; k < centered.cols(); ++k) {
            double mu = 0.0;
            for (std::size_t c = 0; c < centered.rows(); ++c) mu += centered(c, k);
            mu /= static_cast<double>(centered.rows());
            for (std::size_t c = 0; c < centered.rows(); ++c) centered(c, k) -= mu;
        }
        json report = {{"train", args.train_out.string()},
                       {"test", args.test_out.string()},
                       {"samples", {{"train", train.size()}, {"test", test.size()}}},
                       {"nc1", nc1(stats)}};
        try {
            report["nc2_means"] = nc2(centered);
        } catch (const Error&) {
            report["nc2_means"] = nullptr;
        }
        out << report.dump() << '\n';
    } catch (const Error& e) {
        report_error(to_string(e.kind()), e.what());
        return 1;
    }
    return 0;
}

} // namespace cli

} // namespace lsinit
