#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "simtune/errors.hpp"
#include "simtune/gradcheck.hpp"
#include "simtune/rng.hpp"
#include "simtune/sampling.hpp"
#include "simtune/surrogate.hpp"
#include "simtune/training.hpp"

using namespace simtune;

namespace {

SurrogateModel tiny_model(const std::vector<std::string>& opcodes, int embed = 6, int hidden = 8,
                          int depth = 2, std::uint64_t seed = 7) {
    SurrogateConfig config;
    config.embed_dim = embed;
    config.hidden_dim = hidden;
    config.depth = depth;
    config.vocabulary = build_token_vocabulary(opcodes, config.register_count);
    return SurrogateModel::init(std::move(config), seed);
}

ParameterTable sample_table(const std::vector<std::string>& opcodes, std::uint64_t seed) {
    SamplingSpec spec;
    Rng rng(seed);
    return sample_parameter_table(spec, opcodes, rng);
}

}  // namespace

TEST_CASE("token vocabulary layout and unknown fallback") {
    auto vocab = build_token_vocabulary({"ADD", "MUL"}, 4);
    CHECK(vocab[0] == "<PAD>");
    CHECK(vocab[1] == "<UNK>");
    CHECK(vocab[6] == "r0");
    CHECK(vocab.back() == "MUL");
    CHECK(vocab.size() == 6 + 4 + 2);

    SurrogateModel m = tiny_model({"ADD", "MUL"});
    CHECK(m.token_id("ADD") > 0);
    CHECK(m.token_id("NO_SUCH_TOKEN") == 1);
}

TEST_CASE("training features subtract lower bounds and scale") {
    ParameterTable t = sample_table({"ADD"}, 3);
    t.dispatch_width = 4;
    t.reorder_buffer_size = 250;
    t.rows["ADD"].num_micro_ops = 1;
    t.rows["ADD"].write_latency = 5;
    SurrogateModel m = tiny_model({"ADD"});
    auto f = training_features(t, "ADD", m.config);
    REQUIRE(f.size() == 17);
    CHECK(f[0] == doctest::Approx(0.0));               // (1 - 1) / 10
    CHECK(f[1] == doctest::Approx(1.0));               // 5 / 5
    CHECK(f[15] == doctest::Approx(3.0 / 10.0));       // (4 - 1) / 10
    CHECK(f[16] == doctest::Approx(249.0 / 250.0));    // (250 - 1) / 250
}

TEST_CASE("embed_block: one vector per instruction, hidden width, pure") {
    SurrogateModel m = tiny_model({"ADD", "MUL"});
    BasicBlock one = parse_block("ADD W:r1 R:r1,r2");
    auto v1 = embed_block(m, one);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].shape == std::vector<int>{8});

    BasicBlock five = parse_block("ADD W:r1 R: | MUL W:r2 R:r1 | ADD W:r3 R:r2 | MUL W:r4 R:r3 LD:m0 | ADD W:r5 R:r4");
    CHECK(embed_block(m, five).size() == 5);

    CHECK(embed_block(m, five) == embed_block(m, five));
}

TEST_CASE("percentage loss values and error") {
    CHECK(percentage_loss(2.0, 2.0) == doctest::Approx(0.0));
    CHECK(percentage_loss(4.0, 2.0) == doctest::Approx(1.0));
    CHECK(percentage_loss(1.0, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(percentage_loss(1.0, 0.0), DataError);
    CHECK_THROWS_AS(percentage_loss(1.0, -2.0), DataError);
}

TEST_CASE("forward with a continuous table: purity and finiteness") {
    std::vector<std::string> opcodes = {"ADD", "MUL", "LD"};
    SurrogateModel m = tiny_model(opcodes);
    BasicBlock b = parse_block("ADD W:r1 R:r1 | MUL W:r2 R:r1 LD:m0 | LD W:r3 R:r2");

    SamplingSpec spec;
    Rng rng(99);
    for (int i = 0; i < 100; ++i) {
        ParameterTable t = relax_table(sample_parameter_table(spec, opcodes, rng));
        const double out = surrogate_predict_continuous(m, t, b);
        CHECK(std::isfinite(out));
    }

    ParameterTable t = relax_table(sample_table(opcodes, 5));
    CHECK(surrogate_predict_continuous(m, t, b) == surrogate_predict_continuous(m, t, b));

    ParameterTable doubled = t;
    doubled.reorder_buffer_size *= 2.0;
    CHECK(std::isfinite(surrogate_predict_continuous(m, doubled, b)));
}

TEST_CASE("gradients flow only to opcodes present in the block") {
    std::vector<std::string> opcodes = {"ADD", "MUL", "XOR"};
    SurrogateModel m = tiny_model(opcodes);
    BasicBlock b = parse_block("ADD W:r1 R:r1 | MUL W:r2 R:r1");
    ParameterTable cont = relax_table(sample_table(opcodes, 17));

    Graph g;
    BoundModel bound = bind_model(g, m, nullptr);
    NamedTensors tensors = table_to_tensors(cont);
    NamedTensors sinks = zeros_like(tensors);
    BoundTable bt = bind_table(g, m, tensors, &sinks, {"ADD", "MUL", "XOR"});
    g.backward(percentage_loss(g, predict_with_table(g, m, bound, bt, b), 2.0));

    for (double v : sinks.at("op/XOR").data) CHECK(v == 0.0);
    double add_norm = 0.0, global_norm = 0.0;
    for (double v : sinks.at("op/ADD").data) add_norm += std::fabs(v);
    for (double v : sinks.at("global").data) global_norm += std::fabs(v);
    CHECK(add_norm > 0.0);
    CHECK(global_norm > 0.0);
}

TEST_CASE("gradcheck: loss of forward against 20 random table entries") {
    std::vector<std::string> opcodes = {"ADD", "MUL"};
    SurrogateModel m = tiny_model(opcodes, 4, 6, 2, 21);
    BasicBlock b = parse_block("ADD W:r1 R:r1 | MUL W:r2 R:r1 LD:m0 | ADD W:r3 R:r2,r1");
    ParameterTable cont = relax_table(sample_table(opcodes, 23));
    NamedTensors base = table_to_tensors(cont);
    const double target = 2.75;

    // Coordinates spread over both rows and the globals; distinct so each
    // finite difference perturbs exactly one table entry.
    std::set<std::pair<std::string, int>> unique;
    Rng rng(12);
    while (unique.size() < 18) {
        const std::string name = unique.size() % 2 ? "op/ADD" : "op/MUL";
        unique.emplace(name, static_cast<int>(rng.uniform_int(0, 14)));
    }
    std::vector<std::pair<std::string, int>> coords(unique.begin(), unique.end());
    coords.emplace_back("global", 0);
    coords.emplace_back("global", 1);

    auto with_point = [&](const std::vector<double>& p) {
        NamedTensors tensors = base;
        for (std::size_t i = 0; i < coords.size(); ++i)
            tensors.at(coords[i].first)[coords[i].second] = p[i];
        return tensors;
    };
    DiffFunction f{
        [&](const std::vector<double>& p) {
            NamedTensors tensors = with_point(p);
            Graph g;
            BoundModel bound = bind_model(g, m, nullptr);
            BoundTable bt = bind_table(g, m, tensors, nullptr, {"ADD", "MUL"});
            return g.value(percentage_loss(g, predict_with_table(g, m, bound, bt, b), target))[0];
        },
        [&](const std::vector<double>& p) {
            NamedTensors tensors = with_point(p);
            NamedTensors sinks = zeros_like(tensors);
            Graph g;
            BoundModel bound = bind_model(g, m, nullptr);
            BoundTable bt = bind_table(g, m, tensors, &sinks, {"ADD", "MUL"});
            g.backward(percentage_loss(g, predict_with_table(g, m, bound, bt, b), target));
            std::vector<double> out(p.size());
            for (std::size_t i = 0; i < coords.size(); ++i)
                out[i] = sinks.at(coords[i].first)[coords[i].second];
            return out;
        },
    };

    std::vector<double> point(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        point[i] = base.at(coords[i].first)[coords[i].second];
        // Keep clear of the |x| kink so central differences stay valid.
        if (std::fabs(point[i]) < 0.05) point[i] = 0.35;
    }
    CHECK(gradient_check(f, point, 1e-4) < 1e-4);
}

TEST_CASE("forward handles block lengths from 1 to 256") {
    SurrogateModel m = tiny_model({"ADD"}, 3, 4, 1);
    ParameterTable t = relax_table(sample_table({"ADD"}, 2));
    for (int length : {1, 2, 17, 256}) {
        BasicBlock b;
        b.id = "len";
        Instruction instr = parse_block("ADD W:r1 R:r1").instructions[0];
        b.instructions.assign(static_cast<std::size_t>(length), instr);
        CHECK(std::isfinite(surrogate_predict_continuous(m, t, b)));
    }
}

TEST_CASE("surrogate save and load preserve predictions") {
    auto dir = std::filesystem::temp_directory_path();
    const std::string weights = (dir / "simtune-surrogate.bin").string();
    const std::string meta = (dir / "simtune-surrogate.meta").string();

    std::vector<std::string> opcodes = {"ADD", "MUL"};
    SurrogateModel m = tiny_model(opcodes);
    save_surrogate(m, weights, meta);
    SurrogateModel back = load_surrogate(weights, meta);

    CHECK(back.config.vocabulary == m.config.vocabulary);
    CHECK(back.weights == m.weights);
    BasicBlock b = parse_block("MUL W:r2 R:r1 | ADD W:r1 R:r2");
    ParameterTable t = sample_table(opcodes, 31);
    CHECK(surrogate_predict(back, t, b) == surrogate_predict(m, t, b));

    std::filesystem::remove(weights);
    std::filesystem::remove(meta);
}
