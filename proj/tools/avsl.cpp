#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avsl/pipeline.hpp"
#include "avsl/report.hpp"
#include "avsl/synthdata.hpp"
#include "avsl/trainer.hpp"

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) avsl::raise(avsl::ErrorKind::io, "cannot write " + path.string());
    out << text;
}

std::filesystem::path checkpoint_prefix(std::string ckpt) {
    if (ckpt.size() > 5 && ckpt.ends_with(".avst")) {
        ckpt.resize(ckpt.size() - 5);
    }
    return ckpt;
}

std::vector<avsl::Condition> parse_conditions(const std::string& csv) {
    std::vector<avsl::Condition> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(avsl::condition_from_name(item));
    }
    if (out.empty()) {
        avsl::raise(avsl::ErrorKind::usage, "--calib-conditions must name at least one condition");
    }
    return out;
}

struct GridSpec {
    std::string key;
    std::vector<double> values;
};

GridSpec parse_grid(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
        avsl::raise(avsl::ErrorKind::usage, "--grid must look like lambda-sn=0,0.5,1");
    }
    GridSpec g;
    g.key = spec.substr(0, eq);
    if (g.key != "lambda-sn" && g.key != "lambda-geo") {
        avsl::raise(avsl::ErrorKind::usage, "--grid key must be lambda-sn or lambda-geo");
    }
    std::stringstream ss(spec.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            g.values.push_back(std::stod(item));
        } catch (const std::exception&) {
            avsl::raise(avsl::ErrorKind::usage, "--grid value '" + item + "' is not a number");
        }
    }
    if (g.values.empty()) {
        avsl::raise(avsl::ErrorKind::usage, "--grid needs at least one value");
    }
    return g;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"avsl: desk-scale audio-visual sound source localization trainer and "
                 "evaluation suite"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic audio-visual dataset");
    avsl::DatasetConfig gen_cfg;
    std::string gen_out;
    gen->add_option("--classes", gen_cfg.synth.n_classes, "Number of classes")->capture_default_str();
    gen->add_option("--train", gen_cfg.n_train, "Train samples")->capture_default_str();
    gen->add_option("--calib", gen_cfg.n_calib, "Calibration samples")->capture_default_str();
    gen->add_option("--eval", gen_cfg.n_eval, "Eval samples")->capture_default_str();
    gen->add_option("--seed", gen_cfg.seed, "Dataset seed")->capture_default_str();
    gen->add_option("--grid", gen_cfg.synth.grid_h, "Square grid side")->capture_default_str();
    gen->add_option("--objects", gen_cfg.synth.objects_per_scene, "Objects per scene")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train the two-stream model");
    std::string train_data, train_config_file, train_out = "ckpt";
    avsl::TrainConfig tc;
    double opt_lambda_sn = 0, opt_lambda_geo = 0, opt_alpha_max = 0, opt_lr = 0, opt_kappa = 0;
    int opt_alpha_ramp = 0, opt_epochs = 0, opt_batch = 0, opt_c = 0, opt_hidden = 0;
    std::uint64_t opt_seed = 0;
    bool no_sam = false, no_geo = false, no_mask = false;
    std::string opt_optimizer;
    train_cmd->add_option("--data", train_data, "Dataset directory")->required();
    train_cmd->add_option("--config", train_config_file, "JSON train config file");
    auto* o_lsn = train_cmd->add_option("--lambda-sn", opt_lambda_sn, "Silence+noise loss weight");
    auto* o_lgeo = train_cmd->add_option("--lambda-geo", opt_lambda_geo, "Equivariance loss weight");
    auto* o_amax = train_cmd->add_option("--alpha-max", opt_alpha_max, "SAM mixing ceiling");
    auto* o_aramp = train_cmd->add_option("--alpha-ramp", opt_alpha_ramp, "SAM ramp epochs");
    auto* o_epochs = train_cmd->add_option("--epochs", opt_epochs, "Training epochs");
    auto* o_seed = train_cmd->add_option("--seed", opt_seed, "Training seed");
    auto* o_batch = train_cmd->add_option("--batch", opt_batch, "Batch size");
    auto* o_lr = train_cmd->add_option("--lr", opt_lr, "Learning rate");
    auto* o_kappa = train_cmd->add_option("--kappa", opt_kappa, "Contrastive temperature");
    auto* o_c = train_cmd->add_option("--c", opt_c, "Embedding dimension");
    auto* o_hidden = train_cmd->add_option("--hidden", opt_hidden, "Hidden layer width");
    auto* o_opt = train_cmd->add_option("--optimizer", opt_optimizer, "adam | sgd");
    train_cmd->add_flag("--no-sam", no_sam, "Disable similar-audio mixing");
    train_cmd->add_flag("--no-geo", no_geo, "Disable the equivariance loss");
    train_cmd->add_flag("--no-mask", no_mask, "Disable feature masking");
    train_cmd->add_option("--out", train_out, "Checkpoint prefix")->capture_default_str();

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Write embeddings and similarity maps");
    std::string embed_ckpt, embed_manifest, embed_out;
    embed_cmd->add_option("--ckpt", embed_ckpt, "Checkpoint prefix or .avst path")->required();
    embed_cmd->add_option("--manifest", embed_manifest, "Dataset manifest.jsonl")->required();
    embed_cmd->add_option("--out", embed_out, "Output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Calibrate the threshold and score the eval split");
    std::string eval_maps, eval_manifest, eval_out = "report.json";
    std::string eval_conditions = "silence,noise,offscreen";
    std::string eval_timestamp;
    eval_cmd->add_option("--maps", eval_maps, "Embed output directory")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "Dataset manifest.jsonl")->required();
    eval_cmd->add_option("--calib-conditions", eval_conditions,
                         "Comma list of calibration conditions")
        ->capture_default_str();
    eval_cmd->add_option("--timestamp", eval_timestamp,
                         "Provenance timestamp (empty keeps reports byte-stable)");
    eval_cmd->add_option("--out", eval_out, "Report path")->capture_default_str();

    // retrieve
    auto* retr_cmd = app.add_subcommand("retrieve", "Cross-modal retrieval P@K / A@K");
    std::string retr_dir, retr_direction = "i2a", retr_ks = "1,5,10", retr_out = "retrieval.json";
    retr_cmd->add_option("--embeddings", retr_dir, "Embed output directory")->required();
    retr_cmd->add_option("--direction", retr_direction, "i2a | a2i")->capture_default_str();
    retr_cmd->add_option("--k", retr_ks, "Comma list of K values")->capture_default_str();
    retr_cmd->add_option("--out", retr_out, "Output path")->capture_default_str();

    // report
    auto* report_cmd = app.add_subcommand("report", "Comparison table over report files");
    std::vector<std::string> report_inputs;
    std::string report_format = "csv", report_out, report_boxplot_out;
    report_cmd->add_option("--inputs", report_inputs, "Report JSON files")->required();
    report_cmd->add_option("--format", report_format, "csv | md")->capture_default_str();
    report_cmd->add_option("--out", report_out, "Table output path (stdout if omitted)");
    report_cmd->add_option("--boxplot-out", report_boxplot_out, "Boxplot CSV output path");

    // ablate
    auto* ablate_cmd = app.add_subcommand("ablate", "Paired-arm sweep over a loss weight");
    std::string ablate_data, ablate_grid = "lambda-sn=0,1", ablate_out = "ablation";
    int ablate_seeds = 5, ablate_epochs = 0;
    ablate_cmd->add_option("--data", ablate_data, "Dataset directory")->required();
    ablate_cmd->add_option("--grid", ablate_grid, "Sweep spec, e.g. lambda-sn=0,0.5,1")
        ->capture_default_str();
    ablate_cmd->add_option("--seeds", ablate_seeds, "Paired seeds per arm")->capture_default_str();
    auto* ab_epochs = ablate_cmd->add_option("--epochs", ablate_epochs, "Training epochs");
    ablate_cmd->add_option("--out", ablate_out, "Output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e); // --help and friends
        }
        std::cerr << app.help() << "\n";
        std::cerr << json{{"error", "Usage"}, {"message", e.what()}, {"exit_code", 1}}.dump()
                  << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(gen)) {
            avsl::gen_dataset(gen_cfg, gen_out);
            std::cout << "dataset written to " << gen_out << "\n";
        } else if (app.got_subcommand(train_cmd)) {
            const avsl::Dataset ds = avsl::load_dataset(train_data);
            if (!train_config_file.empty()) {
                tc = avsl::load_train_config(train_config_file);
            }
            if (o_lsn->count()) tc.lambda_sn = opt_lambda_sn;
            if (o_lgeo->count()) tc.lambda_geo = opt_lambda_geo;
            if (o_amax->count()) tc.alpha_max = opt_alpha_max;
            if (o_aramp->count()) tc.alpha_ramp_epochs = opt_alpha_ramp;
            if (o_epochs->count()) tc.epochs = opt_epochs;
            if (o_seed->count()) tc.seed = opt_seed;
            if (o_batch->count()) tc.batch_size = opt_batch;
            if (o_lr->count()) tc.learning_rate = opt_lr;
            if (o_kappa->count()) tc.kappa = opt_kappa;
            if (o_c->count()) tc.c = opt_c;
            if (o_hidden->count()) tc.hidden = opt_hidden;
            if (o_opt->count()) {
                if (opt_optimizer != "adam" && opt_optimizer != "sgd") {
                    avsl::raise(avsl::ErrorKind::usage, "--optimizer must be adam or sgd");
                }
                tc.optimizer.kind = opt_optimizer == "sgd" ? avsl::OptimizerConfig::Kind::sgd
                                                           : avsl::OptimizerConfig::Kind::adam;
            }
            if (no_sam) tc.sam_enabled = false;
            if (no_geo) tc.geo_enabled = false;
            if (no_mask) tc.mask_enabled = false;
            tc.grid_h = ds.config.synth.grid_h;
            tc.grid_w = ds.config.synth.grid_w;

            const avsl::TrainSet set = avsl::load_train_set(ds);
            const avsl::TrainResult result = avsl::train(tc, set);
            avsl::save_checkpoint(train_out, result.params, tc, set.audio_shape);
            avsl::save_history(train_out + "_history.json", result.history);
            std::cout << "checkpoint written to " << train_out << ".avst\n";
        } else if (app.got_subcommand(embed_cmd)) {
            const avsl::Checkpoint ckpt = avsl::load_checkpoint(checkpoint_prefix(embed_ckpt));
            const std::filesystem::path manifest_path(embed_manifest);
            const avsl::Dataset ds = avsl::load_dataset(manifest_path.parent_path());
            avsl::write_embed_outputs(ckpt, ds, embed_out);
            std::cout << "embeddings written to " << embed_out << "\n";
        } else if (app.got_subcommand(eval_cmd)) {
            const avsl::EvalMaterials materials = avsl::load_eval_materials(eval_maps);
            const std::vector<avsl::Condition> conditions = parse_conditions(eval_conditions);
            const std::string dataset_hash = avsl::hash_file(eval_manifest);
            // Hash the embed manifest as the model-side provenance: it pins
            // the checkpoint outputs the report was computed from.
            const std::string config_hash =
                avsl::hash_file(std::filesystem::path(eval_maps) / "embeddings.jsonl");
            const avsl::ReportFile report = avsl::build_report(materials, conditions, config_hash,
                                                               dataset_hash, eval_timestamp);
            avsl::save_report(eval_out, report);
            std::cout << "report written to " << eval_out << "\n";
        } else if (app.got_subcommand(retr_cmd)) {
            const avsl::EvalMaterials materials = avsl::load_eval_materials(retr_dir);
            std::vector<int> ks;
            std::stringstream ss(retr_ks);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) ks.push_back(std::stoi(item));
            }
            if (ks.empty()) avsl::raise(avsl::ErrorKind::usage, "--k needs at least one value");
            const avsl::RetrievalResult res =
                avsl::run_retrieval(materials.audio_items, materials.image_items, retr_direction, ks);
            avsl::save_retrieval(
                retr_out, res,
                avsl::hash_file(std::filesystem::path(retr_dir) / "embeddings.jsonl"), "");
            std::cout << "retrieval written to " << retr_out << "\n";
        } else if (app.got_subcommand(report_cmd)) {
            std::vector<std::pair<std::string, avsl::ReportFile>> reports;
            for (const std::string& path : report_inputs) {
                reports.emplace_back(std::filesystem::path(path).stem().string(),
                                     avsl::load_report(path));
            }
            const std::string table = avsl::render_report_table(reports, report_format);
            if (report_out.empty()) {
                std::cout << table;
            } else {
                write_text(report_out, table);
            }
            if (!report_boxplot_out.empty()) {
                std::ostringstream csv;
                csv << "model,condition,min,q1,median,q3,max,n,theta\n";
                for (const auto& [name, r] : reports) {
                    for (const auto& [cond, s] : r.boxplot) {
                        csv << name << ',' << cond << ',' << s.min << ',' << s.q1 << ','
                            << s.median << ',' << s.q3 << ',' << s.max << ',' << s.n << ','
                            << r.metrics.theta << "\n";
                    }
                }
                write_text(report_boxplot_out, csv.str());
            }
        } else if (app.got_subcommand(ablate_cmd)) {
            const avsl::Dataset ds = avsl::load_dataset(ablate_data);
            const GridSpec grid = parse_grid(ablate_grid);
            std::filesystem::create_directories(ablate_out);
            json rows = json::array();
            std::ostringstream csv;
            csv << "param,value,seed,ciou_uth,pia_silence,pia_noise,pia_offscreen,f_loc,sep,"
                   "mean_sil_max,mean_noise_max\n";
            for (double value : grid.values) {
                for (int s = 0; s < ablate_seeds; ++s) {
                    avsl::TrainConfig cfg = tc;
                    cfg.grid_h = ds.config.synth.grid_h;
                    cfg.grid_w = ds.config.synth.grid_w;
                    cfg.seed = static_cast<std::uint64_t>(s + 1);
                    if (ab_epochs->count()) cfg.epochs = ablate_epochs;
                    if (grid.key == "lambda-sn") {
                        cfg.lambda_sn = value;
                    } else {
                        cfg.lambda_geo = value;
                    }
                    const avsl::AblationRow row = avsl::run_arm(ds, cfg);
                    const avsl::MetricsReport& m = row.metrics;
                    rows.push_back(json{{"param", grid.key},
                                        {"value", value},
                                        {"seed", cfg.seed},
                                        {"ciou_uth", m.ciou_uth},
                                        {"pia_silence", m.pia[0]},
                                        {"pia_noise", m.pia[1]},
                                        {"pia_offscreen", m.pia[2]},
                                        {"f_loc", m.f_loc},
                                        {"sep", m.separability},
                                        {"mean_sil_max", row.final_mean_sil_max},
                                        {"mean_noise_max", row.final_mean_noise_max}});
                    csv << grid.key << ',' << value << ',' << cfg.seed << ',' << m.ciou_uth << ','
                        << m.pia[0] << ',' << m.pia[1] << ',' << m.pia[2] << ',' << m.f_loc << ','
                        << m.separability << ',' << row.final_mean_sil_max << ','
                        << row.final_mean_noise_max << "\n";
                    std::cout << grid.key << "=" << value << " seed=" << cfg.seed
                              << " ciou=" << m.ciou_uth << " f_loc=" << m.f_loc << "\n";
                }
            }
            write_text(std::filesystem::path(ablate_out) / "summary.json", rows.dump(2) + "\n");
            write_text(std::filesystem::path(ablate_out) / "summary.csv", csv.str());
            std::cout << "ablation summary written to " << ablate_out << "\n";
        }
    } catch (const avsl::Error& e) {
        std::cerr << json{{"error", std::string(avsl::error_kind_name(e.kind()))},
                          {"message", e.what()},
                          {"exit_code", e.exit_code()}}
                         .dump()
                  << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}, {"exit_code", 3}}.dump()
                  << "\n";
        return 3;
    }
    return 0;
}
