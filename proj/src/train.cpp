#include "dgx/train.hpp"

#include <cmath>

namespace dgx {

std::vector<Query> Task::queries() const {
    std::vector<Query> out;
    if (kind == HeadKind::link_prediction) {
        for (const LinkExample& e : links) {
            out.push_back(Query::link(e.source, e.target));
        }
    } else {
        for (std::size_t u : nodes) {
            out.push_back(Query::node(u));
        }
    }
    return out;
}

std::vector<double> Task::labels() const {
    if (kind == HeadKind::node_regression) {
        return targets;
    }
    std::vector<double> out;
    for (const LinkExample& e : links) {
        out.push_back(e.label);
    }
    return out;
}

void validate_task(const Task& task, std::size_t num_nodes) {
    if (task.size() == 0) {
        throw ValidationError("task has no labelled queries");
    }
    if (task.kind == HeadKind::link_prediction) {
        if (!task.nodes.empty() || !task.targets.empty()) {
            throw ValidationError("link task must not carry node targets");
        }
        for (const LinkExample& e : task.links) {
            if (e.source >= num_nodes || e.target >= num_nodes) {
                throw ValidationError("link label (" + std::to_string(e.source) + "," + std::to_string(e.target) +
                                      ") out of range for N=" + std::to_string(num_nodes));
            }
            if (e.label != 0.0 && e.label != 1.0) {
                throw ValidationError("link labels must be 0 or 1");
            }
        }
    } else {
        if (!task.links.empty()) {
            throw ValidationError("regression task must not carry link labels");
        }
        if (task.nodes.size() != task.targets.size()) {
            throw ValidationError("regression task has " + std::to_string(task.nodes.size()) + " nodes but " +
                                  std::to_string(task.targets.size()) + " targets");
        }
        for (std::size_t k = 0; k < task.nodes.size(); ++k) {
            if (task.nodes[k] >= num_nodes) {
                throw ValidationError("regression node " + std::to_string(task.nodes[k]) + " out of range for N=" +
                                      std::to_string(num_nodes));
            }
            if (!std::isfinite(task.targets[k])) {
                throw ValidationError("regression target " + std::to_string(k) + " is not finite");
            }
        }
    }
}

void validate_train_config(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) {
        throw ValidationError("learning rate must be > 0");
    }
    if (config.epochs < 1) {
        throw ValidationError("epochs must be >= 1");
    }
}

Adam::Adam(const ModelParams& shape_like, const TrainConfig& config) : config_(config) {
    for (const ConstTensorView& t : tensors(shape_like)) {
        m_.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
    }
}

void Adam::step(ModelParams& params, const ModelParams& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, t_);
    const double c2 = 1.0 - std::pow(config_.beta2, t_);
    auto p = tensors(params);
    auto g = tensors(grads);
    if (p.size() != m_.size()) {
        throw ValidationError("Adam: parameter layout changed between steps");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
        for (Eigen::Index e = 0; e < p[k].size(); ++e) {
            const auto i = static_cast<std::size_t>(e);
            const double grad = g[k].data[e];
            m_[k][i] = config_.beta1 * m_[k][i] + (1.0 - config_.beta1) * grad;
            v_[k][i] = config_.beta2 * v_[k][i] + (1.0 - config_.beta2) * grad * grad;
            const double m_hat = m_[k][i] / c1;
            const double v_hat = v_[k][i] / c2;
            p[k].data[e] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
        }
    }
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

LossAndGradient loss_and_gradient(const DynamicGraph& graph, const ModelParams& params, const Task& task) {
    validate_task(task, graph.num_nodes());
    if (task.kind != params.head.kind) {
        throw ValidationError("task kind does not match the model head");
    }
    const EncoderTrace enc = encode(graph, params);
    LossAndGradient out{0.0, zero_gradients(params, enc)};
    Matrix d_hidden = Matrix::Zero(enc.final_hidden.rows(), enc.final_hidden.cols());
    const Eigen::Index h = d_hidden.cols();
    const auto queries = task.queries();
    const auto labels = task.labels();
    const double scale = 1.0 / static_cast<double>(queries.size());
    for (std::size_t k = 0; k < queries.size(); ++k) {
        const HeadTrace head = head_forward(params.head, head_input(enc, queries[k]));
        double d_output = 0.0;
        if (task.kind == HeadKind::link_prediction) {
            // BCE with logits: softplus(x) - y x.
            out.loss += scale * (softplus(head.output) - labels[k] * head.output);
            d_output = scale * (head.probability - labels[k]);
        } else {
            const double diff = head.output - labels[k];
            out.loss += scale * diff * diff;
            d_output = scale * 2.0 * diff;
        }
        const Vector d_in = head_backward(params.head, head, d_output, out.gradient.d_params.head);
        d_hidden.row(static_cast<Eigen::Index>(queries[k].source)) += d_in.head(h).transpose();
        if (queries[k].is_link) {
            d_hidden.row(static_cast<Eigen::Index>(queries[k].target)) += d_in.tail(h).transpose();
        }
    }
    encoder_backward(enc, params, d_hidden, out.gradient);
    if (!std::isfinite(out.loss)) {
        throw NumericError("training loss is not finite");
    }
    return out;
}

double task_loss(const DynamicGraph& graph, const ModelParams& params, const Task& task) {
    return loss_and_gradient(graph, params, task).loss;
}

TrainResult train_from(ModelParams init, const DynamicGraph& graph, const Task& task, const TrainConfig& config) {
    validate_train_config(config);
    validate_dynamic_graph(graph);
    TrainResult result{std::move(init), {}};
    Adam adam(result.params, config);
    result.loss_history.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const LossAndGradient lg = loss_and_gradient(graph, result.params, task);
        result.loss_history.push_back(lg.loss);
        adam.step(result.params, lg.gradient.d_params);
    }
    return result;
}

TrainResult train(const DynamicGraph& graph, const Task& task, const ModelConfig& model, const TrainConfig& config) {
    validate_train_config(config);
    ModelConfig m = model;
    m.input_dim = graph.num_features();
    m.head_kind = task.kind;
    return train_from(init_params(m, config.seed), graph, task, config);
}

}  // namespace dgx
