// alignet: representation-alignment pipeline CLI.
//
// Subcommands wrap one module operation each; `pipeline` chains them.
// Configuration is a flat `key = value` file; explicit flags win over the
// file, the file wins over defaults. Every run writes manifest.json into
// its output directory, on success and on failure. Exit codes: 0 ok,
// 2 validation/config error, 3 numeric failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alignet/affine.hpp"
#include "alignet/cluster.hpp"
#include "alignet/config.hpp"
#include "alignet/gaussian.hpp"
#include "alignet/hash.hpp"
#include "alignet/io.hpp"
#include "alignet/kernels.hpp"
#include "alignet/labeler.hpp"
#include "alignet/manifest.hpp"
#include "alignet/metrics.hpp"
#include "alignet/rng.hpp"
#include "alignet/student.hpp"
#include "alignet/synth.hpp"

namespace fs = std::filesystem;
using namespace alignet;

namespace {

struct KeySpec {
    std::string key;
    std::string fallback;
    std::string help;
};

struct CommandKeys {
    std::vector<KeySpec> keys;
    void add(const std::string& key, const std::string& fallback, const std::string& help) {
        keys.push_back({key, fallback, help});
    }
};

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Collected flag overrides: --set key=value plus dedicated --config.
struct Invocation {
    std::string config_path;
    std::vector<std::string> overrides;

    Config build() const {
        Config cfg = config_path.empty() ? Config() : Config::parse_file(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                fail("ConfigError", "--set expects key=value, got '" + kv + "'");
            std::string key = kv.substr(0, eq);
            std::string value = kv.substr(eq + 1);
            while (!key.empty() && key.back() == ' ') key.pop_back();
            while (!value.empty() && value.front() == ' ') value.erase(value.begin());
            cfg.set(key, value);
        }
        return cfg;
    }
};

void attach_common(CLI::App* cmd, Invocation& inv) {
    cmd->add_option("--config", inv.config_path, "flat key = value config file");
    cmd->add_option("--set", inv.overrides,
                    "override a config key (key=value); repeatable, wins over the file");
}

std::string describe_keys(const CommandKeys& keys) {
    std::string out = "\nConfig keys (file or --set):\n";
    for (const auto& k : keys.keys) {
        out += "  " + k.key;
        if (!k.fallback.empty()) out += " [default: " + k.fallback + "]";
        out += "\n      " + k.help + "\n";
    }
    return out;
}

int run_command(const std::string& name, const Invocation& inv,
                const std::function<void(Config&, RunManifest&)>& body) {
    const auto started = std::chrono::steady_clock::now();
    Config cfg;
    RunManifest manifest;
    manifest.command = name;
    std::string out_dir;
    try {
        cfg = inv.build();
        manifest.config = cfg.entries();
        out_dir = cfg.get_string("out_dir", "");
        body(cfg, manifest);
        cfg.reject_unknown();
        manifest.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                .count();
        if (!out_dir.empty()) manifest.write(out_dir);
        return 0;
    } catch (const Error& e) {
        manifest.status = "error";
        manifest.error = e.what();
        manifest.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                .count();
        if (!out_dir.empty()) {
            try {
                manifest.write(out_dir);
            } catch (...) {
            }
        }
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == "NonFiniteLoss" ? 3 : 2;
    }
}

fs::path out_path(Config& cfg, RunManifest& manifest, const std::string& name) {
    const std::string out_dir = cfg.get_string("out_dir", ".");
    fs::create_directories(out_dir);
    fs::path p = fs::path(out_dir) / name;
    manifest.outputs.push_back(p.string());
    return p;
}

EmbeddingMatrix load_embeddings_tracked(const std::string& path, RunManifest& manifest) {
    manifest.add_input(path);
    return load_embeddings(path);
}

LoadedTriplets load_triplets_tracked(const std::string& path, TripletFileKind kind,
                                     RunManifest& manifest) {
    manifest.add_input(path);
    return load_triplets(path, kind);
}

OptimConfig optimizer_from(Config& cfg, double default_lr) {
    OptimConfig opt;
    opt.learning_rate = cfg.get_double("learning_rate", default_lr);
    const std::string kind = cfg.get_string("optimizer", "adam");
    if (kind == "adam") {
        opt.kind = OptimizerKind::adam;
    } else if (kind == "sgd") {
        opt.kind = OptimizerKind::sgd;
    } else {
        fail("ConfigError", "optimizer must be adam or sgd");
    }
    opt.beta1 = cfg.get_double("beta1", 0.9);
    opt.beta2 = cfg.get_double("beta2", 0.999);
    return opt;
}

UdConfig ud_config_from(Config& cfg) {
    UdConfig ud;
    ud.lambda = cfg.get_double("lambda", 0.1);
    if (ud.lambda < 0.0) fail("ConfigError", "lambda must be >= 0");
    ud.optimizer = optimizer_from(cfg, 3e-4);
    ud.steps = static_cast<std::size_t>(cfg.get_int("steps", 2000));
    ud.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 1024));
    ud.seed = cfg.require_seed();
    ud.tau = cfg.get_double("tau", 1.0);
    ud.val_fraction = cfg.get_double("val_fraction", 0.1);
    ud.patience = static_cast<std::size_t>(cfg.get_int("patience", 5));
    ud.normalize_rows = cfg.get_bool("normalize_rows", false);
    ud.threads = static_cast<int>(cfg.get_int("threads", 1));
    ud.validate();
    return ud;
}

void write_summary(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail("IoFailure", "cannot write '" + path.string() + "'");
    for (const auto& [key, value] : kv) out << key << " = " << value << "\n";
}

// ---- stage cache -----------------------------------------------------------
// A stage is skipped when its stamp matches the hash of inputs+params and
// all its outputs still exist.

std::uint64_t combine_hashes(const std::vector<std::uint64_t>& parts) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (auto part : parts) h = fnv1a64(&part, sizeof(part), h);
    return h;
}

bool stage_cached(const fs::path& out_dir, const std::string& stage, std::uint64_t key,
                  const std::vector<fs::path>& outputs) {
    const fs::path stamp = out_dir / (stage + ".stamp");
    if (!fs::exists(stamp)) return false;
    std::ifstream in(stamp);
    std::string recorded;
    in >> recorded;
    if (recorded != hex64(key)) return false;
    for (const auto& f : outputs)
        if (!fs::exists(f)) return false;
    return true;
}

void stamp_stage(const fs::path& out_dir, const std::string& stage, std::uint64_t key) {
    std::ofstream out(out_dir / (stage + ".stamp"), std::ios::trunc);
    out << hex64(key) << "\n";
}

// ---- subcommand bodies -----------------------------------------------------

void cmd_synth(Config& cfg, RunManifest& manifest) {
    HierarchySpec spec;
    spec.superordinates = static_cast<std::size_t>(cfg.get_int("superordinates", 4));
    spec.basics_per_super = static_cast<std::size_t>(cfg.get_int("basics_per_super", 4));
    spec.subs_per_basic = static_cast<std::size_t>(cfg.get_int("subs_per_basic", 2));
    spec.items_per_sub = static_cast<std::size_t>(cfg.get_int("items_per_sub", 8));
    spec.dim = static_cast<std::size_t>(cfg.get_int("dim", 32));
    spec.disp_super = cfg.get_double("disp_super", 0.40);
    spec.disp_basic = cfg.get_double("disp_basic", 0.22);
    spec.disp_sub = cfg.get_double("disp_sub", 0.12);
    spec.disp_item = cfg.get_double("disp_item", 0.07);
    spec.seed = cfg.require_seed();
    manifest.seed = spec.seed;
    manifest.seeded = true;

    const double severity = cfg.get_double("severity", 0.8);
    const double noise_strength = cfg.get_double("noise_strength", 5.0);
    const double tau_h = cfg.get_double("tau_h", 0.5);
    const auto n_triplets = static_cast<std::size_t>(cfg.get_int("count", 5000));
    const auto n_subjects = static_cast<std::size_t>(cfg.get_int("subjects", 5));
    const double rt_noise = cfg.get_double("rt_noise", 0.1);
    const double rt_alpha = cfg.get_double("rt_alpha", 0.7);
    const double rt_beta = cfg.get_double("rt_beta", 0.5);

    const auto h = generate_hierarchy(spec);
    const auto corrupted =
        corrupt_teacher(h.truth, severity, derived_seed(spec.seed, 1), noise_strength);

    SamplerConfig sampler;
    sampler.count = n_triplets;
    sampler.seed = derived_seed(spec.seed, 2);
    const auto triplets = sample_random(h.truth.rows, sampler);
    const auto sim = simulate_responses(h.truth, triplets.triplets, Temperature(tau_h), n_subjects,
                                        derived_seed(spec.seed, 3));
    const auto rts =
        simulate_rts(sim.p_star, rt_noise, derived_seed(spec.seed, 4), rt_alpha, rt_beta);

    TripletDataset soft = triplets;
    soft.kind = LabelKind::soft;
    soft.soft = sim.p_star;

    save_embeddings(h.truth, out_path(cfg, manifest, "truth.emb").string());
    save_embeddings(corrupted, out_path(cfg, manifest, "teacher.emb").string());
    save_labels(h.labels, out_path(cfg, manifest, "labels.tsv").string());
    save_triplets(soft, out_path(cfg, manifest, "triplets_soft.tsv").string());
    const auto hard0 = responses_to_hard_dataset(triplets.triplets, sim, 0);
    save_triplets(hard0, out_path(cfg, manifest, "triplets_hard_subject0.tsv").string());
    save_rts(rts, out_path(cfg, manifest, "rts.tsv").string());
    write_summary(out_path(cfg, manifest, "synth_summary.txt"),
                  {{"items", std::to_string(h.truth.rows)},
                   {"dim", std::to_string(h.truth.dims)},
                   {"triplets", std::to_string(soft.size())},
                   {"noise_ceiling_loo", fmt_g(loo_noise_ceiling(sim.responses))}});
}

void cmd_fit_ud(Config& cfg, RunManifest& manifest) {
    const auto mat = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto loaded =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::soft, manifest);
    UdConfig ud = ud_config_from(cfg);
    manifest.seed = ud.seed;
    manifest.seeded = true;
    const auto fit = fit_ud(mat, loaded.dataset, ud);
    save_affine(fit.transform, out_path(cfg, manifest, "transform.aff1").string());
    fit.log.save(out_path(cfg, manifest, "fit_ud_log.tsv").string());
    save_embeddings(apply_affine(fit.transform, mat),
                    out_path(cfg, manifest, "teacher_aligned.emb").string());
}

void cmd_cluster(Config& cfg, RunManifest& manifest) {
    const auto mat = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const std::uint64_t seed = cfg.require_seed();
    manifest.seed = seed;
    manifest.seeded = true;
    const auto max_iter = static_cast<std::size_t>(cfg.get_int("max_iter", 100));
    const auto n_init = static_cast<std::size_t>(cfg.get_int("n_init", 4));
    auto k = static_cast<std::size_t>(cfg.get_int("k", 0));
    bool no_knee = false;
    std::vector<double> inertias;
    if (k == 0) {
        const auto k_min = static_cast<std::size_t>(cfg.get_int("k_min", 2));
        const auto k_max = static_cast<std::size_t>(cfg.get_int("k_max", 16));
        std::vector<std::size_t> candidates;
        for (std::size_t c = k_min; c <= k_max; ++c) candidates.push_back(c);
        const auto elbow = elbow_select(mat, candidates, seed, max_iter, n_init);
        k = elbow.k;
        no_knee = elbow.no_knee;
        inertias = elbow.inertias;
    }
    const auto km = kmeans(mat, k, seed, max_iter, n_init);
    HierarchyLabels labels;
    labels.resize(mat.rows);
    for (std::size_t r = 0; r < mat.rows; ++r)
        labels.cluster[r] = static_cast<std::int64_t>(km.assignment[r]);
    labels.item_ids = mat.item_ids;
    save_labels(labels, out_path(cfg, manifest, "clusters.tsv").string());
    save_embeddings(km.centroids, out_path(cfg, manifest, "centroids.emb").string());
    std::vector<std::pair<std::string, std::string>> kv{
        {"k", std::to_string(k)},
        {"inertia", fmt_g(km.inertia)},
        {"iterations", std::to_string(km.iterations)},
        {"no_knee", no_knee ? "true" : "false"}};
    for (std::size_t idx = 0; idx < inertias.size(); ++idx)
        kv.push_back({"elbow_inertia_" + std::to_string(idx), fmt_g(inertias[idx])});
    write_summary(out_path(cfg, manifest, "cluster_summary.txt"), kv);
}

void cmd_sample(Config& cfg, RunManifest& manifest) {
    SamplerConfig sampler;
    sampler.count = static_cast<std::size_t>(cfg.get_int("count", 100000));
    sampler.seed = cfg.require_seed();
    manifest.seed = sampler.seed;
    manifest.seeded = true;
    const std::string strategy = cfg.get_string("strategy", "cluster_boundary");
    TripletDataset ds;
    if (strategy == "random") {
        const auto mat = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
        ds = sample_random(mat.rows, sampler);
    } else if (strategy == "class_boundary") {
        const std::string labels_path = cfg.require_string("labels");
        manifest.add_input(labels_path);
        const auto labels = load_labels(labels_path);
        const std::string level = cfg.get_string("class_level", "subordinate");
        LabelLevel lvl = LabelLevel::subordinate;
        if (level == "basic") {
            lvl = LabelLevel::basic;
        } else if (level == "superordinate") {
            lvl = LabelLevel::superordinate;
        } else if (level != "subordinate") {
            fail("ConfigError", "class_level must be subordinate|basic|superordinate");
        }
        ds = sample_class_boundary(labels, sampler, lvl);
    } else if (strategy == "cluster_boundary") {
        const std::string clusters_path = cfg.require_string("clusters");
        manifest.add_input(clusters_path);
        const auto labels = load_labels(clusters_path);
        KMeansResult km;
        km.assignment.resize(labels.size());
        std::int64_t max_cluster = -1;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            if (labels.cluster[r] < 0)
                fail("DegenerateClusters", "row " + std::to_string(r) + " unassigned");
            km.assignment[r] = static_cast<std::uint32_t>(labels.cluster[r]);
            max_cluster = std::max(max_cluster, labels.cluster[r]);
        }
        km.centroids = EmbeddingMatrix(static_cast<std::size_t>(max_cluster + 1), 1);
        ds = sample_cluster_boundary(km, sampler);
    } else {
        fail("ConfigError", "strategy must be random|class_boundary|cluster_boundary");
    }
    save_triplets(ds, out_path(cfg, manifest, "triplets_sampled.tsv").string());
}

void cmd_label(Config& cfg, RunManifest& manifest) {
    const auto teacher = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto unlabeled =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::unlabeled, manifest);
    const double tau = cfg.get_double("tau", 1.0);
    std::uint64_t transform_hash = 0;
    const std::string transform = cfg.get_string("transform", "");
    if (!transform.empty()) {
        manifest.add_input(transform);
        transform_hash = hash_file(transform);
    }
    const auto result = label_triplets(teacher, unlabeled.dataset, Temperature(tau), transform_hash);
    save_triplets(result.dataset, out_path(cfg, manifest, "alignet.tsv").string(), result.meta);
    write_summary(out_path(cfg, manifest, "label_summary.txt"),
                  {{"triplets", std::to_string(result.dataset.size())},
                   {"ties", std::to_string(result.tie_count)},
                   {"tau", fmt_g(tau)},
                   {"transform_hash", hex64(result.meta.transform_hash)}});
}

void cmd_distill(Config& cfg, RunManifest& manifest) {
    const auto inputs = load_embeddings_tracked(cfg.require_string("inputs"), manifest);
    const auto dataset =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::alignet, manifest);
    DistillConfig dc;
    dc.tau_teacher = cfg.get_double("tau_teacher", 1.0);
    dc.tau_student = cfg.get_double("tau_student", 100.0);
    dc.lambda = cfg.get_double("lambda", 0.1);
    dc.optimizer = optimizer_from(cfg, 3e-4);
    dc.steps = static_cast<std::size_t>(cfg.get_int("steps", 2000));
    dc.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 1024));
    dc.seed = cfg.require_seed();
    dc.val_fraction = cfg.get_double("val_fraction", 0.1);
    dc.threads = static_cast<int>(cfg.get_int("threads", 1));
    dc.validate();
    manifest.seed = dc.seed;
    manifest.seeded = true;
    if (dataset.meta && std::abs(dataset.meta->tau - dc.tau_teacher) > 1e-12)
        fail("ConfigError", "dataset tau " + fmt_g(dataset.meta->tau) +
                                " does not match tau_teacher " + fmt_g(dc.tau_teacher));
    StudentParams init;
    const std::string arch = cfg.get_string("student_arch", "affine");
    if (arch == "affine") {
        init = StudentParams::affine_identity(inputs.dims);
    } else if (arch == "mlp") {
        StudentArch a;
        a.widths = {inputs.dims, static_cast<std::size_t>(cfg.get_int("hidden", 64)),
                    static_cast<std::size_t>(cfg.get_int("out_dim", static_cast<std::int64_t>(inputs.dims)))};
        a.nonlin = Nonlinearity::gelu;
        init = StudentParams::random_init(a, derived_seed(dc.seed, 0x111));
    } else {
        fail("ConfigError", "student_arch must be affine or mlp");
    }
    const auto fit = train_student(init, dataset.dataset, inputs, dc);
    save_student(fit.params, out_path(cfg, manifest, "student.stu1").string());
    fit.log.save(out_path(cfg, manifest, "distill_log.tsv").string());
    save_embeddings(student_forward(fit.params, inputs),
                    out_path(cfg, manifest, "student_embeddings.emb").string());
}

void cmd_eval_ooo(Config& cfg, RunManifest& manifest) {
    const auto model = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto ds =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::hard, manifest);
    const double accuracy = ooo_accuracy(model, ds.dataset);
    write_summary(out_path(cfg, manifest, "ooo_summary.txt"),
                  {{"ooo_accuracy", fmt_g(accuracy)},
                   {"triplets", std::to_string(ds.dataset.size())}});
    std::cout << "ooo_accuracy = " << fmt_g(accuracy) << "\n";
}

void cmd_eval_rsa(Config& cfg, RunManifest& manifest) {
    const auto model = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto reference = load_embeddings_tracked(cfg.require_string("reference"), manifest);
    const double rho = rsa_score(rsm_pearson(model), rsm_pearson(reference));
    write_summary(out_path(cfg, manifest, "rsa_summary.txt"), {{"rsa_spearman", fmt_g(rho)}});
    std::cout << "rsa_spearman = " << fmt_g(rho) << "\n";
}

void cmd_eval_uncertainty(Config& cfg, RunManifest& manifest) {
    const auto model = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto ds =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::unlabeled, manifest);
    const std::string rts_path = cfg.require_string("rts");
    manifest.add_input(rts_path);
    const auto rts = load_rts(rts_path, ds.dataset.size());
    const double tau = cfg.get_double("tau", 1.0);
    const double cutoff = cfg.get_double("rt_cutoff", 10.0);
    const bool median = cfg.get_string("rt_aggregate", "mean") == "median";
    const double rho =
        uncertainty_rt_correlation(model, ds.dataset, rts, Temperature(tau), cutoff, median);
    write_summary(out_path(cfg, manifest, "uncertainty_summary.txt"),
                  {{"entropy_rt_spearman", fmt_g(rho)}});
    std::cout << "entropy_rt_spearman = " << fmt_g(rho) << "\n";
}

void cmd_noise_ceiling(Config& cfg, RunManifest& manifest) {
    // responses file: one line per triplet, whitespace-separated odd positions
    const std::string path = cfg.require_string("responses");
    manifest.add_input(path);
    std::ifstream in(path);
    if (!in) fail("IoFailure", "cannot open '" + path + "'");
    std::vector<std::vector<std::uint8_t>> responses;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::uint8_t> row;
        std::istringstream fields(line);
        int v;
        while (fields >> v) {
            if (v < 0 || v > 2) fail("ParseError", "responses must be 0, 1, or 2");
            row.push_back(static_cast<std::uint8_t>(v));
        }
        responses.push_back(row);
    }
    const double ceiling = loo_noise_ceiling(responses);
    write_summary(out_path(cfg, manifest, "noise_ceiling_summary.txt"),
                  {{"loo_noise_ceiling", fmt_g(ceiling)}});
    std::cout << "loo_noise_ceiling = " << fmt_g(ceiling) << "\n";
}

void cmd_shift(Config& cfg, RunManifest& manifest) {
    const auto before = load_embeddings_tracked(cfg.require_string("before"), manifest);
    const auto after = load_embeddings_tracked(cfg.require_string("after"), manifest);
    const std::string labels_path = cfg.require_string("labels");
    manifest.add_input(labels_path);
    const auto labels = load_labels(labels_path);
    const auto pair_sample = static_cast<std::size_t>(cfg.get_int("pair_sample", 200000));
    const std::uint64_t seed = cfg.require_seed();
    manifest.seed = seed;
    manifest.seeded = true;
    const auto report = representation_shift(before, after, labels, pair_sample, seed);
    report.save(out_path(cfg, manifest, "shift_report.tsv").string());
    for (const auto& level : report.levels) {
        std::cout << pair_level_name(level.level) << " mean_dz=" << fmt_g(level.mean_dz) << " ci=["
                  << fmt_g(level.ci_low) << ", " << fmt_g(level.ci_high)
                  << "] pairs=" << level.pair_count << "\n";
    }
}

void cmd_pca(Config& cfg, RunManifest& manifest) {
    const auto mat = load_embeddings_tracked(cfg.require_string("embeddings"), manifest);
    const auto components = static_cast<std::size_t>(
        cfg.get_int("components", static_cast<std::int64_t>(std::min(mat.rows, mat.dims))));
    const auto fractions = pca_explained_variance(mat, components);
    std::ostringstream body;
    body << "component\texplained_variance_fraction\n";
    for (std::size_t c = 0; c < fractions.size(); ++c) body << c << '\t' << fmt_g(fractions[c]) << "\n";
    const auto path = out_path(cfg, manifest, "pca_explained_variance.tsv");
    std::ofstream out(path);
    if (!out) fail("IoFailure", "cannot write '" + path.string() + "'");
    out << body.str();
}

void cmd_vice(Config& cfg, RunManifest& manifest) {
    const auto loaded =
        load_triplets_tracked(cfg.require_string("triplets"), TripletFileKind::hard, manifest);
    GaussianFitConfig gc;
    gc.dim = static_cast<std::size_t>(cfg.get_int("vice_dim", 64));
    gc.steps = static_cast<std::size_t>(cfg.get_int("steps", 2000));
    gc.batch_size = static_cast<std::size_t>(cfg.get_int("batch_size", 256));
    gc.optimizer.learning_rate = cfg.get_double("learning_rate", 1e-2);
    gc.seed = cfg.require_seed();
    manifest.seed = gc.seed;
    manifest.seeded = true;
    auto items = static_cast<std::size_t>(cfg.get_int("items", 0));
    if (items == 0) {
        for (const auto& t : loaded.dataset.triplets)
            items = std::max({items, static_cast<std::size_t>(t.i) + 1,
                              static_cast<std::size_t>(t.j) + 1, static_cast<std::size_t>(t.k) + 1});
    }
    const auto fit = fit_gaussian_embeddings(loaded.dataset, items, gc);
    McConfig mc;
    mc.samples = static_cast<std::size_t>(cfg.get_int("mc_samples", 50));
    mc.seed = derived_seed(gc.seed, 0x3C);
    const auto probs = mc_triplet_probs(fit.embedding, loaded.dataset.triplets, mc);
    TripletDataset soft;
    soft.kind = LabelKind::soft;
    soft.triplets = loaded.dataset.triplets;
    soft.soft = probs;
    save_triplets(soft, out_path(cfg, manifest, "p_star.tsv").string());
    write_summary(out_path(cfg, manifest, "vice_summary.txt"),
                  {{"items", std::to_string(items)},
                   {"dim", std::to_string(gc.dim)},
                   {"mc_samples", std::to_string(mc.samples)},
                   {"final_epoch_loss",
                    fmt_g(fit.epoch_loss.empty() ? 0.0 : fit.epoch_loss.back())}});
}

// full pipeline: fit-ud -> cluster -> sample -> label -> distill -> eval
void cmd_pipeline(Config& cfg, RunManifest& manifest) {
    const std::string out_dir_str = cfg.get_string("out_dir", ".");
    const fs::path out_dir(out_dir_str);
    fs::create_directories(out_dir);
    const std::uint64_t seed = cfg.require_seed();
    manifest.seed = seed;
    manifest.seeded = true;

    const std::string teacher_path = cfg.require_string("embeddings");
    const std::string soft_path = cfg.require_string("triplets");
    const std::string inputs_path = cfg.get_string("inputs", teacher_path);
    const std::string labels_path = cfg.get_string("labels", "");
    manifest.add_input(teacher_path);
    manifest.add_input(soft_path);
    if (inputs_path != teacher_path) manifest.add_input(inputs_path);
    if (!labels_path.empty()) manifest.add_input(labels_path);

    UdConfig ud = ud_config_from(cfg);
    ud.seed = derived_seed(seed, 1);
    const auto k_fixed = static_cast<std::size_t>(cfg.get_int("k", 0));
    const auto k_min = static_cast<std::size_t>(cfg.get_int("k_min", 2));
    const auto k_max = static_cast<std::size_t>(cfg.get_int("k_max", 16));
    const auto n_init = static_cast<std::size_t>(cfg.get_int("n_init", 4));
    const auto max_iter = static_cast<std::size_t>(cfg.get_int("max_iter", 100));
    const auto sample_count = static_cast<std::size_t>(cfg.get_int("count", 100000));
    const double label_tau = cfg.get_double("tau", 1.0);

    DistillConfig dc;
    dc.tau_teacher = cfg.get_double("tau_teacher", 1.0);
    dc.tau_student = cfg.get_double("tau_student", 100.0);
    dc.lambda = cfg.get_double("distill_lambda", 1e-3);
    dc.optimizer.learning_rate = cfg.get_double("distill_learning_rate", 1e-2);
    dc.steps = static_cast<std::size_t>(cfg.get_int("distill_steps", 3000));
    dc.batch_size = static_cast<std::size_t>(cfg.get_int("distill_batch_size", 512));
    dc.seed = derived_seed(seed, 5);
    dc.threads = ud.threads;
    dc.validate();
    const double holdout_fraction = cfg.get_double("holdout_fraction", 0.1);

    const std::uint64_t teacher_hash = hash_file(teacher_path);
    const std::uint64_t soft_hash = hash_file(soft_path);
    const std::uint64_t inputs_hash = hash_file(inputs_path);

    // --- stage 1: fit-ud
    const fs::path transform_file = out_dir / "transform.aff1";
    const fs::path aligned_file = out_dir / "teacher_aligned.emb";
    const std::uint64_t ud_key = combine_hashes(
        {teacher_hash, soft_hash, ud.seed, static_cast<std::uint64_t>(ud.steps),
         static_cast<std::uint64_t>(ud.batch_size), fnv1a64(&ud.lambda, sizeof(double)),
         fnv1a64(&ud.optimizer.learning_rate, sizeof(double)), fnv1a64(&ud.tau, sizeof(double))});
    if (!stage_cached(out_dir, "fit_ud", ud_key, {transform_file, aligned_file})) {
        const auto teacher = load_embeddings(teacher_path);
        const auto soft = load_triplets(soft_path, TripletFileKind::soft);
        const auto fit = fit_ud(teacher, soft.dataset, ud);
        save_affine(fit.transform, transform_file.string());
        fit.log.save((out_dir / "fit_ud_log.tsv").string());
        save_embeddings(apply_affine(fit.transform, teacher), aligned_file.string());
        stamp_stage(out_dir, "fit_ud", ud_key);
    }
    manifest.outputs.push_back(transform_file.string());
    manifest.outputs.push_back(aligned_file.string());

    // --- stage 2: cluster the aligned teacher space
    const fs::path clusters_file = out_dir / "clusters.tsv";
    const std::uint64_t cluster_key =
        combine_hashes({hash_file(aligned_file.string()), derived_seed(seed, 2),
                        static_cast<std::uint64_t>(k_fixed), static_cast<std::uint64_t>(k_min),
                        static_cast<std::uint64_t>(k_max), static_cast<std::uint64_t>(n_init)});
    if (!stage_cached(out_dir, "cluster", cluster_key, {clusters_file})) {
        const auto aligned = load_embeddings(aligned_file.string());
        std::size_t k = k_fixed;
        bool no_knee = false;
        if (k == 0) {
            std::vector<std::size_t> candidates;
            for (std::size_t c = k_min; c <= k_max && c <= aligned.rows; ++c) candidates.push_back(c);
            const auto elbow =
                elbow_select(aligned, candidates, derived_seed(seed, 2), max_iter, n_init);
            k = elbow.k;
            no_knee = elbow.no_knee;
        }
        const auto km = kmeans(aligned, k, derived_seed(seed, 2), max_iter, n_init);
        HierarchyLabels cluster_labels;
        cluster_labels.resize(aligned.rows);
        for (std::size_t r = 0; r < aligned.rows; ++r)
            cluster_labels.cluster[r] = static_cast<std::int64_t>(km.assignment[r]);
        save_labels(cluster_labels, clusters_file.string());
        write_summary(out_dir / "cluster_summary.txt",
                      {{"k", std::to_string(k)},
                       {"inertia", fmt_g(km.inertia)},
                       {"no_knee", no_knee ? "true" : "false"}});
        stamp_stage(out_dir, "cluster", cluster_key);
    }
    manifest.outputs.push_back(clusters_file.string());

    // --- stage 3: cluster-boundary sampling
    const fs::path sampled_file = out_dir / "triplets_sampled.tsv";
    const std::uint64_t sample_key =
        combine_hashes({hash_file(clusters_file.string()), derived_seed(seed, 3),
                        static_cast<std::uint64_t>(sample_count)});
    if (!stage_cached(out_dir, "sample", sample_key, {sampled_file})) {
        const auto cluster_labels = load_labels(clusters_file.string());
        KMeansResult km;
        km.assignment.resize(cluster_labels.size());
        std::int64_t max_cluster = 0;
        for (std::size_t r = 0; r < cluster_labels.size(); ++r) {
            km.assignment[r] = static_cast<std::uint32_t>(cluster_labels.cluster[r]);
            max_cluster = std::max(max_cluster, cluster_labels.cluster[r]);
        }
        km.centroids = EmbeddingMatrix(static_cast<std::size_t>(max_cluster + 1), 1);
        SamplerConfig sampler;
        sampler.count = sample_count;
        sampler.seed = derived_seed(seed, 3);
        const auto sampled = sample_cluster_boundary(km, sampler);
        save_triplets(sampled, sampled_file.string());
        stamp_stage(out_dir, "sample", sample_key);
    }
    manifest.outputs.push_back(sampled_file.string());

    // --- stage 4: surrogate labeling with the aligned teacher
    const fs::path alignet_file = out_dir / "alignet.tsv";
    const std::uint64_t label_key =
        combine_hashes({hash_file(aligned_file.string()), hash_file(sampled_file.string()),
                        fnv1a64(&label_tau, sizeof(double))});
    if (!stage_cached(out_dir, "label", label_key, {alignet_file})) {
        const auto aligned = load_embeddings(aligned_file.string());
        const auto sampled = load_triplets(sampled_file.string(), TripletFileKind::unlabeled);
        const auto labeled = label_triplets(aligned, sampled.dataset, Temperature(label_tau),
                                            hash_file(transform_file.string()));
        save_triplets(labeled.dataset, alignet_file.string(), labeled.meta);
        write_summary(out_dir / "label_summary.txt",
                      {{"triplets", std::to_string(labeled.dataset.size())},
                       {"ties", std::to_string(labeled.tie_count)}});
        stamp_stage(out_dir, "label", label_key);
    }
    manifest.outputs.push_back(alignet_file.string());

    // --- stage 5: distill into the student
    const fs::path student_file = out_dir / "student.stu1";
    const fs::path student_emb_file = out_dir / "student_embeddings.emb";
    const std::uint64_t distill_key = combine_hashes(
        {hash_file(alignet_file.string()), inputs_hash, dc.seed,
         static_cast<std::uint64_t>(dc.steps), fnv1a64(&dc.lambda, sizeof(double)),
         fnv1a64(&dc.tau_student, sizeof(double)), fnv1a64(&holdout_fraction, sizeof(double))});
    const auto holdout_of = [&](std::size_t n) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = derived_rng(seed, 4);
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        const auto n_holdout =
            static_cast<std::size_t>(static_cast<double>(n) * holdout_fraction);
        return std::vector<std::size_t>(order.begin(), order.begin() + n_holdout);
    };
    if (!stage_cached(out_dir, "distill", distill_key, {student_file, student_emb_file})) {
        const auto dataset = load_triplets(alignet_file.string(), TripletFileKind::alignet);
        const auto inputs = load_embeddings(inputs_path);
        const auto holdout = holdout_of(dataset.dataset.size());
        std::vector<bool> held(dataset.dataset.size(), false);
        for (auto idx : holdout) held[idx] = true;
        TripletDataset train;
        train.kind = LabelKind::both;
        for (std::size_t s = 0; s < dataset.dataset.size(); ++s) {
            if (held[s]) continue;
            train.triplets.push_back(dataset.dataset.triplets[s]);
            train.hard.push_back(dataset.dataset.hard[s]);
            train.soft.push_back(dataset.dataset.soft[s]);
        }
        const auto fit =
            train_student(StudentParams::affine_identity(inputs.dims), train, inputs, dc);
        save_student(fit.params, student_file.string());
        fit.log.save((out_dir / "distill_log.tsv").string());
        save_embeddings(student_forward(fit.params, inputs), student_emb_file.string());
        stamp_stage(out_dir, "distill", distill_key);
    }
    manifest.outputs.push_back(student_file.string());
    manifest.outputs.push_back(student_emb_file.string());

    // --- stage 6: consolidated evaluation report
    const auto dataset = load_triplets(alignet_file.string(), TripletFileKind::alignet);
    const auto inputs = load_embeddings(inputs_path);
    const auto student = load_student(student_file.string());
    const auto student_z = load_embeddings(student_emb_file.string());
    const auto aligned = load_embeddings(aligned_file.string());
    const auto holdout = holdout_of(dataset.dataset.size());

    TripletDataset held_ds;
    held_ds.kind = LabelKind::both;
    for (auto idx : holdout) {
        held_ds.triplets.push_back(dataset.dataset.triplets[idx]);
        held_ds.hard.push_back(dataset.dataset.hard[idx]);
        held_ds.soft.push_back(dataset.dataset.soft[idx]);
    }
    std::vector<std::pair<std::string, std::string>> report;
    if (!held_ds.triplets.empty()) {
        report.push_back({"holdout_teacher_agreement", fmt_g(ooo_accuracy(student_z, held_ds))});
        report.push_back({"holdout_triplets", std::to_string(held_ds.size())});
    }
    report.push_back({"rsa_student_vs_aligned_teacher",
                      fmt_g(rsa_score(rsm_pearson(student_z), rsm_pearson(aligned)))});
    if (!labels_path.empty()) {
        const auto labels = load_labels(labels_path);
        const auto before = student_forward(
            StudentParams{student.arch, student.theta_init, student.theta_init}, inputs);
        const auto shift =
            representation_shift(before, student_z, labels, 200000, derived_seed(seed, 6));
        shift.save((out_dir / "shift_report.tsv").string());
        manifest.outputs.push_back((out_dir / "shift_report.tsv").string());
        for (const auto& level : shift.levels) {
            report.push_back(
                {std::string("shift_") + pair_level_name(level.level), fmt_g(level.mean_dz)});
        }
    }
    const auto pca = pca_explained_variance(
        student_z, std::min<std::size_t>(8, std::min(student_z.rows, student_z.dims)));
    for (std::size_t c = 0; c < pca.size(); ++c)
        report.push_back({"student_pca_fraction_" + std::to_string(c), fmt_g(pca[c])});
    write_summary(out_dir / "report.txt", report);
    manifest.outputs.push_back((out_dir / "report.txt").string());
}

struct Sub {
    std::string name;
    std::string help;
    void (*body)(Config&, RunManifest&);
    CommandKeys keys;
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"alignet: human-aligned representation pipeline"};
    app.require_subcommand(1);

    std::vector<Sub> subs;
    {
        Sub s{"synth",
              "generate a synthetic hierarchy testbed (ground truth, corrupted teacher, soft "
              "triplets, RTs)",
              cmd_synth,
              {}};
        s.keys.add("out_dir", ".", "output directory");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("superordinates", "4", "superordinate count");
        s.keys.add("basics_per_super", "4", "basic categories per superordinate");
        s.keys.add("subs_per_basic", "2", "subordinates per basic");
        s.keys.add("items_per_sub", "8", "items per subordinate");
        s.keys.add("dim", "32", "embedding width");
        s.keys.add("disp_super", "0.40", "superordinate dispersion");
        s.keys.add("disp_basic", "0.22", "basic dispersion");
        s.keys.add("disp_sub", "0.12", "subordinate dispersion");
        s.keys.add("disp_item", "0.07", "item dispersion");
        s.keys.add("severity", "0.8", "teacher corruption severity [0,1]");
        s.keys.add("noise_strength", "5.0", "corruption noise scale (relative)");
        s.keys.add("tau_h", "0.5", "simulated-response softmax temperature");
        s.keys.add("count", "5000", "triplets to simulate");
        s.keys.add("subjects", "5", "simulated subjects per triplet");
        s.keys.add("rt_noise", "0.1", "log-RT noise sd");
        s.keys.add("rt_alpha", "0.7", "log-RT intercept");
        s.keys.add("rt_beta", "0.5", "log-RT slope on entropy");
        subs.push_back(s);
    }
    {
        Sub s{"fit-ud", "learn the uncertainty-distillation affine transform from soft triplets",
              cmd_fit_ud, {}};
        s.keys.add("embeddings", "", "teacher embedding file (required)");
        s.keys.add("triplets", "", "soft triplet file (required)");
        s.keys.add("out_dir", ".", "output directory");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("lambda", "0.1", "identity-anchored regularizer weight");
        s.keys.add("learning_rate", "0.0003", "optimizer peak learning rate");
        s.keys.add("optimizer", "adam", "adam | sgd");
        s.keys.add("beta1", "0.9", "Adam beta1");
        s.keys.add("beta2", "0.999", "Adam beta2");
        s.keys.add("steps", "2000", "total mini-batch steps");
        s.keys.add("batch_size", "1024", "mini-batch size");
        s.keys.add("tau", "1", "softmax temperature during fitting");
        s.keys.add("val_fraction", "0.1", "validation split fraction");
        s.keys.add("patience", "5", "early-stopping patience (epochs)");
        s.keys.add("normalize_rows", "false", "L2-normalize embedding rows first");
        s.keys.add("threads", "1", "worker threads (1 = bitwise reproducible)");
        subs.push_back(s);
    }
    {
        Sub s{"cluster", "k-means over an embedding space (elbow-selected k when k = 0)",
              cmd_cluster, {}};
        s.keys.add("embeddings", "", "embedding file (required)");
        s.keys.add("out_dir", ".", "output directory");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("k", "0", "cluster count; 0 = elbow-select over [k_min, k_max]");
        s.keys.add("k_min", "2", "smallest elbow candidate");
        s.keys.add("k_max", "16", "largest elbow candidate");
        s.keys.add("max_iter", "100", "Lloyd iteration cap");
        s.keys.add("n_init", "4", "k-means++ restarts");
        subs.push_back(s);
    }
    {
        Sub s{"sample", "draw triplets (random / class_boundary / cluster_boundary)", cmd_sample, {}};
        s.keys.add("strategy", "cluster_boundary", "random | class_boundary | cluster_boundary");
        s.keys.add("count", "100000", "triplets to draw (n')");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("embeddings", "", "embedding file (random strategy)");
        s.keys.add("labels", "", "labels file (class_boundary)");
        s.keys.add("class_level", "subordinate", "label level for class_boundary");
        s.keys.add("clusters", "", "cluster labels file (cluster_boundary)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"label", "label triplets with a teacher: hard choices + soft triples", cmd_label, {}};
        s.keys.add("embeddings", "", "(transformed) teacher embedding file (required)");
        s.keys.add("triplets", "", "unlabeled triplet file (required)");
        s.keys.add("tau", "1", "soft-label temperature (tau')");
        s.keys.add("transform", "", "transform file whose hash stamps the dataset");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"distill", "train the student on an AligNet dataset", cmd_distill, {}};
        s.keys.add("inputs", "", "student input features (required)");
        s.keys.add("triplets", "", "AligNet dataset file (required)");
        s.keys.add("out_dir", ".", "output directory");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("tau_teacher", "1", "teacher temperature tau'");
        s.keys.add("tau_student", "100",
                   "student temperature (published: 100 fine-tune, 1000 from scratch)");
        s.keys.add("lambda", "0.1", "weight decay to initialization");
        s.keys.add("learning_rate", "0.0003", "optimizer peak learning rate");
        s.keys.add("optimizer", "adam", "adam | sgd");
        s.keys.add("beta1", "0.9", "Adam beta1");
        s.keys.add("beta2", "0.999", "Adam beta2");
        s.keys.add("steps", "2000", "total mini-batch steps");
        s.keys.add("batch_size", "1024", "mini-batch size");
        s.keys.add("val_fraction", "0.1", "validation split fraction");
        s.keys.add("student_arch", "affine", "affine | mlp");
        s.keys.add("hidden", "64", "hidden width (mlp)");
        s.keys.add("out_dim", "input width", "output width (mlp)");
        s.keys.add("threads", "1", "worker threads");
        subs.push_back(s);
    }
    {
        Sub s{"eval-ooo", "odd-one-out accuracy of a model on hard triplets", cmd_eval_ooo, {}};
        s.keys.add("embeddings", "", "model embedding file (required)");
        s.keys.add("triplets", "", "hard triplet file (required)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"eval-rsa", "Spearman RSA between two embedding spaces (Pearson-kernel RSMs)",
              cmd_eval_rsa, {}};
        s.keys.add("embeddings", "", "model embedding file (required)");
        s.keys.add("reference", "", "reference embedding file (required)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"eval-uncertainty", "spearman(triplet entropy, aggregated log-RT)",
              cmd_eval_uncertainty, {}};
        s.keys.add("embeddings", "", "model embedding file (required)");
        s.keys.add("triplets", "", "triplet file (required)");
        s.keys.add("rts", "", "response-time file (required)");
        s.keys.add("tau", "1", "entropy temperature");
        s.keys.add("rt_cutoff", "10", "exclude RTs above this many seconds");
        s.keys.add("rt_aggregate", "mean", "mean | median of log-RT");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"noise-ceiling", "leave-one-out human agreement ceiling", cmd_noise_ceiling, {}};
        s.keys.add("responses", "", "per-triplet response file: odd positions per line (required)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"shift", "z-scored relative distance changes by hierarchy level", cmd_shift, {}};
        s.keys.add("before", "", "embedding file before (required)");
        s.keys.add("after", "", "embedding file after (required)");
        s.keys.add("labels", "", "hierarchy labels file (required)");
        s.keys.add("pair_sample", "200000", "pair budget (exact enumeration when m <= 2000)");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"pca", "explained-variance fractions of the centered covariance", cmd_pca, {}};
        s.keys.add("embeddings", "", "embedding file (required)");
        s.keys.add("components", "min(m,p)", "components to report");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"vice", "fit Gaussian embeddings to hard choices and export Monte-Carlo p*",
              cmd_vice, {}};
        s.keys.add("triplets", "", "hard triplet file (required)");
        s.keys.add("items", "0", "item count (0 = infer from indices)");
        s.keys.add("vice_dim", "64", "embedding dimension d");
        s.keys.add("steps", "2000", "optimizer steps");
        s.keys.add("batch_size", "256", "mini-batch size");
        s.keys.add("learning_rate", "0.01", "Adam learning rate");
        s.keys.add("mc_samples", "50", "Monte-Carlo samples R");
        s.keys.add("seed", "", "RNG seed (required)");
        s.keys.add("out_dir", ".", "output directory");
        subs.push_back(s);
    }
    {
        Sub s{"pipeline", "full run: fit-ud -> cluster -> sample -> label -> distill -> eval",
              cmd_pipeline, {}};
        s.keys.add("embeddings", "", "teacher embedding file (required)");
        s.keys.add("triplets", "", "soft triplet file for UD (required)");
        s.keys.add("inputs", "teacher embeddings", "student input features");
        s.keys.add("labels", "", "hierarchy labels for the shift report (optional)");
        s.keys.add("out_dir", ".", "output directory");
        s.keys.add("seed", "", "master RNG seed (required)");
        s.keys.add("lambda", "0.1", "UD regularizer weight");
        s.keys.add("learning_rate", "0.0003", "UD learning rate");
        s.keys.add("optimizer", "adam", "adam | sgd");
        s.keys.add("beta1", "0.9", "Adam beta1");
        s.keys.add("beta2", "0.999", "Adam beta2");
        s.keys.add("steps", "2000", "UD steps");
        s.keys.add("batch_size", "1024", "UD batch size");
        s.keys.add("tau", "1", "labeling temperature tau'");
        s.keys.add("val_fraction", "0.1", "UD validation fraction");
        s.keys.add("patience", "5", "UD early-stop patience");
        s.keys.add("normalize_rows", "false", "L2-normalize teacher rows before UD");
        s.keys.add("k", "0", "cluster count; 0 = elbow-select");
        s.keys.add("k_min", "2", "smallest elbow candidate");
        s.keys.add("k_max", "16", "largest elbow candidate");
        s.keys.add("max_iter", "100", "Lloyd iteration cap");
        s.keys.add("n_init", "4", "k-means++ restarts");
        s.keys.add("count", "100000", "cluster-boundary triplets to sample");
        s.keys.add("tau_teacher", "1", "distillation teacher temperature");
        s.keys.add("tau_student", "100", "distillation student temperature");
        s.keys.add("distill_lambda", "0.001", "weight decay to initialization");
        s.keys.add("distill_learning_rate", "0.01", "distillation learning rate");
        s.keys.add("distill_steps", "3000", "distillation steps");
        s.keys.add("distill_batch_size", "512", "distillation batch size");
        s.keys.add("holdout_fraction", "0.1", "held-out fraction for teacher agreement");
        s.keys.add("threads", "1", "worker threads (1 = bitwise reproducible)");
        subs.push_back(s);
    }

    std::map<std::string, Invocation> invocations;
    std::map<std::string, const Sub*> bodies;
    for (auto& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help + describe_keys(sub.keys));
        attach_common(cmd, invocations[sub.name]);
        bodies[sub.name] = &sub;
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& [name, sub] : bodies) {
        if (app.got_subcommand(name)) {
            return run_command(name, invocations[name], sub->body);
        }
    }
    return 2;
}
