// Copyright (C) 2026 Backdrop Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>

#include "backdrop/dataset/builder.hpp"
#include "backdrop/eval/evaluate.hpp"
#include "backdrop/toy/corpus.hpp"

namespace fs = std::filesystem;
using namespace backdrop;

namespace {

eval::PredictionSets load_prediction_sets(const std::vector<std::string>& specs) {
    // Each spec is model=path/to/predictions.jsonl
    eval::PredictionSets sets;
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw ValidationError("prediction spec must be model=file: " + spec);
        const std::string model = spec.substr(0, eq);
        for (auto& rec : eval::read_prediction_set(spec.substr(eq + 1)))
            sets[model][rec.variant_name].push_back(std::move(rec));
    }
    return sets;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"object-preserving background editing and robustness evaluation"};
    app.require_subcommand(1);

    // ---- corpus ----
    auto* cmd_corpus = app.add_subcommand("corpus", "generate a synthetic scene corpus");
    std::string corpus_out = "corpus";
    int corpus_count = 200;
    std::string corpus_split = "test";
    uint64_t corpus_seed = 7;
    cmd_corpus->add_option("--out", corpus_out, "output directory");
    cmd_corpus->add_option("--count", corpus_count, "number of scenes");
    cmd_corpus->add_option("--split", corpus_split, "split name (train/test)");
    cmd_corpus->add_option("--seed", corpus_seed, "corpus seed");

    // ---- train-toy ----
    auto* cmd_train = app.add_subcommand("train-toy", "train all four backends and write weights");
    std::string train_out = "weights";
    toy::TrainConfig tc;
    cmd_train->add_option("--out", train_out, "weights directory");
    cmd_train->add_option("--seed", tc.seed, "training seed");
    cmd_train->add_option("--train-scenes", tc.train_scenes, "training scene count");
    cmd_train->add_option("--test-scenes", tc.test_scenes, "held-out scene count");
    cmd_train->add_option("--ae-epochs", tc.ae_epochs, "autoencoder epochs");
    cmd_train->add_option("--den-epochs", tc.den_epochs, "denoiser epochs");
    cmd_train->add_option("--clf-epochs", tc.clf_epochs, "classifier epochs");

    // ---- generate ----
    auto* cmd_gen = app.add_subcommand("generate", "generate background variants for a corpus");
    std::string gen_corpus = "corpus", gen_weights = "weights", gen_out = "dataset";
    std::string gen_prompts = "data/prompts/default_prompts.txt";
    std::vector<uint64_t> gen_seeds{1};
    dataset::BuildConfig bc;
    cmd_gen->add_option("--corpus", gen_corpus, "corpus directory");
    cmd_gen->add_option("--weights", gen_weights, "weights directory");
    cmd_gen->add_option("--out", gen_out, "dataset output directory");
    cmd_gen->add_option("--prompts", gen_prompts, "prompt suite file");
    cmd_gen->add_option("--seeds", gen_seeds, "global seeds");
    cmd_gen->add_option("--lambda", bc.lambda, "guidance scale");
    cmd_gen->add_option("--steps", bc.num_steps, "sampling steps");
    cmd_gen->add_option("--strength", bc.strength, "fraction of the grid traversed");
    cmd_gen->add_option("--dilation", bc.dilation_radius, "mask dilation radius in pixels");
    cmd_gen->add_option("--workers", bc.workers, "worker threads (0 = all cores)");

    // ---- attack ----
    auto* cmd_attack = app.add_subcommand("attack", "generate adversarial background variants");
    std::string atk_corpus = "corpus", atk_weights = "weights", atk_out = "dataset";
    std::vector<uint64_t> atk_seeds{1};
    dataset::BuildConfig abc;
    attack::AttackConfig ac;
    std::string loss_kind = "cross_entropy";
    std::string variables = "both";
    cmd_attack->add_option("--corpus", atk_corpus, "corpus directory");
    cmd_attack->add_option("--weights", atk_weights, "weights directory");
    cmd_attack->add_option("--out", atk_out, "dataset output directory");
    cmd_attack->add_option("--seeds", atk_seeds, "global seeds");
    cmd_attack->add_option("--lambda", abc.lambda, "guidance scale");
    cmd_attack->add_option("--steps", abc.num_steps, "sampling steps");
    cmd_attack->add_option("--strength", abc.strength, "fraction of the grid traversed");
    cmd_attack->add_option("--dilation", abc.dilation_radius, "mask dilation radius in pixels");
    cmd_attack->add_option("--workers", abc.workers, "worker threads (0 = all cores)");
    cmd_attack->add_option("--iterations", ac.iterations, "ascent iterations");
    cmd_attack->add_option("--lr", ac.learning_rate, "ascent learning rate");
    cmd_attack->add_option("--start-step", ac.start_step, "remaining transitions at the optimization point");
    cmd_attack->add_option("--loss", loss_kind, "cross_entropy or feature_distance");
    cmd_attack->add_option("--variables", variables, "both, text_only or latent_only");

    // ---- evaluate ----
    auto* cmd_eval = app.add_subcommand("evaluate", "classify a generated dataset");
    std::string ev_corpus = "corpus", ev_weights = "weights", ev_dataset = "dataset", ev_out = "eval";
    std::string ev_model = "toy_cnn";
    int ev_workers = 0;
    cmd_eval->add_option("--corpus", ev_corpus, "corpus directory");
    cmd_eval->add_option("--weights", ev_weights, "weights directory");
    cmd_eval->add_option("--dataset", ev_dataset, "dataset directory (with manifest.jsonl)");
    cmd_eval->add_option("--out", ev_out, "evaluation output directory");
    cmd_eval->add_option("--model", ev_model, "model name recorded in the outputs");
    cmd_eval->add_option("--workers", ev_workers, "worker threads (0 = all cores)");

    // ---- report ----
    auto* cmd_report = app.add_subcommand("report", "render metrics, tables and plots");
    std::string rp_dataset = "dataset", rp_out = "report";
    std::vector<std::string> rp_predictions;
    std::string rp_features, rp_captions;
    eval::ReportConfig rc;
    cmd_report->add_option("--dataset", rp_dataset, "dataset directory (with manifest.jsonl)");
    cmd_report->add_option("--predictions", rp_predictions, "model=predictions.jsonl (repeatable)")->required();
    cmd_report->add_option("--features", rp_features, "features.jsonl");
    cmd_report->add_option("--caption-scores", rp_captions, "caption_scores.jsonl");
    cmd_report->add_option("--out", rp_out, "report output directory");
    cmd_report->add_option("--ece-bins", rc.ece_bins, "calibration bins");
    cmd_report->add_option("--baseline", rc.baseline_variant, "baseline variant name");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*cmd_corpus) {
            const auto scenes = toy::generate_shapes_dataset(corpus_count, corpus_seed, corpus_split);
            toy::write_corpus(scenes, corpus_out);
            std::cout << "wrote " << scenes.size() << " scenes to " << corpus_out << "\n";
        } else if (*cmd_train) {
            toy::TrainReport report;
            toy::ToyStack stack = toy::train_toy_stack(tc, &report);
            toy::save_stack(stack, train_out, &report);
            std::cout << "trained toy stack in " << report.wall_seconds << " s\n"
                      << "  autoencoder test mse:  " << report.ae_test_mse << "\n"
                      << "  classifier test acc:   " << report.clf_test_accuracy << "\n"
                      << "  denoiser val loss:     " << report.den_val_loss_cond << " (cond) / "
                      << report.den_val_loss_uncond << " (uncond)\n";
        } else if (*cmd_gen) {
            const auto corpus = toy::load_corpus(gen_corpus);
            const auto stack = toy::load_stack(gen_weights);
            const auto suite = cond::load_prompt_suite(gen_prompts);
            const auto manifest = dataset::generate_variant_set(corpus, suite, gen_seeds, stack, bc, gen_out);
            size_t ok = 0, skipped = 0;
            for (const auto& r : manifest.records) (r.skipped ? skipped : ok)++;
            std::cout << "manifest: " << ok << " generated, " << skipped << " skipped\n";
        } else if (*cmd_attack) {
            const auto corpus = toy::load_corpus(atk_corpus);
            const auto stack = toy::load_stack(atk_weights);
            ac.loss_kind = loss_kind == "feature_distance" ? attack::LossKind::feature_distance
                                                           : attack::LossKind::cross_entropy;
            ac.variables = variables == "text_only"     ? attack::OptimVariables::text_only
                           : variables == "latent_only" ? attack::OptimVariables::latent_only
                                                        : attack::OptimVariables::both;
            const auto manifest =
                dataset::generate_adversarial_set(corpus, stack, atk_seeds, ac, abc, atk_out);
            size_t attacks = 0, improved = 0;
            for (const auto& r : manifest.records) {
                if (r.skipped || !r.attack_final_loss) continue;
                ++attacks;
                improved += *r.attack_final_loss >= *r.attack_initial_loss ? 1 : 0;
            }
            std::cout << "adversarial records: " << attacks << ", loss increased on " << improved << "\n";
        } else if (*cmd_eval) {
            const auto corpus = toy::load_corpus(ev_corpus);
            const auto stack = toy::load_stack(ev_weights);
            const auto manifest = dataset::read_manifest(fs::path(ev_dataset) / "manifest.jsonl");
            const auto outputs = eval::evaluate_dataset(stack, corpus, manifest, ev_dataset, ev_workers);
            fs::create_directories(ev_out);
            eval::write_prediction_set(fs::path(ev_out) / ("predictions_" + ev_model + ".jsonl"),
                                       outputs.predictions);
            eval::write_feature_set(fs::path(ev_out) / "features.jsonl", outputs.features);
            eval::write_caption_scores(fs::path(ev_out) / "caption_scores.jsonl", outputs.caption_scores);
            std::cout << "evaluated " << outputs.predictions.size() << " images\n";
        } else if (*cmd_report) {
            eval::ReportInputs inputs;
            inputs.manifest = dataset::read_manifest(fs::path(rp_dataset) / "manifest.jsonl");
            inputs.predictions = load_prediction_sets(rp_predictions);
            if (!rp_features.empty()) inputs.features = eval::read_feature_set(rp_features);
            if (!rp_captions.empty()) inputs.caption_scores = eval::read_caption_scores(rp_captions);
            const auto summary = eval::emit_report(inputs, rc, rp_out);
            std::cout << "report written to " << rp_out << "\n";
            if (summary.contains("accuracy_average"))
                for (const auto& [variant, acc] : summary.at("accuracy_average").items())
                    std::cout << "  " << variant << ": " << acc.get<double>() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
