#pragma once

#include "dgx/autodiff.hpp"
#include "dgx/model.hpp"

#include <cstdint>
#include <vector>

namespace dgx {

struct LinkExample {
    std::size_t source = 0;
    std::size_t target = 0;
    double label = 0.0;  ///< 1 = edge present at T+1, 0 = absent
};

/// Supervision for one dynamic graph: labelled pairs (link) or node targets (regression).
struct Task {
    HeadKind kind = HeadKind::link_prediction;
    std::vector<LinkExample> links;
    std::vector<std::size_t> nodes;
    std::vector<double> targets;

    [[nodiscard]] std::vector<Query> queries() const;
    [[nodiscard]] std::vector<double> labels() const;
    [[nodiscard]] std::size_t size() const { return kind == HeadKind::link_prediction ? links.size() : nodes.size(); }
};

void validate_task(const Task& task, std::size_t num_nodes);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& config);

/// Adam with bias correction; state is keyed to the tensor order of ModelParams.
class Adam {
public:
    Adam(const ModelParams& shape_like, const TrainConfig& config);
    void step(ModelParams& params, const ModelParams& grads);

private:
    TrainConfig config_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    int t_ = 0;
};

struct LossAndGradient {
    double loss = 0.0;
    GradientBundle gradient;
};

/// Mean loss over the task (BCE-with-logits for links, MSE for regression) and its gradient.
LossAndGradient loss_and_gradient(const DynamicGraph& graph, const ModelParams& params, const Task& task);
double task_loss(const DynamicGraph& graph, const ModelParams& params, const Task& task);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  ///< loss before each epoch's update
};

/// Full-batch Adam training from a seeded initialization.
TrainResult train(const DynamicGraph& graph, const Task& task, const ModelConfig& model, const TrainConfig& config);

/// Same, starting from given parameters.
TrainResult train_from(ModelParams init, const DynamicGraph& graph, const Task& task, const TrainConfig& config);

}  // namespace dgx
