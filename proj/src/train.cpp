#include "lsg/train.hpp"

#include <algorithm>
#include <numeric>

#include "lsg/kernels.hpp"
#include "lsg/rng.hpp"

namespace lsg {

namespace {

// Pixel accuracy of a probability map against a {0,1} target at 0.5.
double pixel_accuracy(const Tensor<float>& prob, const Tensor<float>& target) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < prob.numel(); ++i) {
        const bool fg = prob.data[i] >= 0.5f;
        const bool truth = target.data[i] >= 0.5f;
        correct += (fg == truth);
    }
    return static_cast<double>(correct) / static_cast<double>(prob.numel());
}

Tensor<float> stack_batch(const std::vector<TrainSample>& samples,
                          const std::vector<int>& order, std::size_t lo, std::size_t hi,
                          bool target) {
    const Tensor<float>& first = target ? samples[order[lo]].target : samples[order[lo]].image;
    const int h = first.dim(2), w = first.dim(3);
    Tensor<float> batch({static_cast<int>(hi - lo), 1, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = lo; i < hi; ++i) {
        const Tensor<float>& src = target ? samples[order[i]].target : samples[order[i]].image;
        std::copy(src.data.begin(), src.data.end(), batch.data.begin() + (i - lo) * plane);
    }
    return batch;
}

} // namespace

TrainResult train_model(SegModel<float>& model, const std::vector<TrainSample>& samples,
                        const TrainOptions& options) {
    if (samples.empty()) throw ValidationError("train_model: empty dataset");
    if (options.epochs < 1) throw ValidationError("train_model: epochs must be >= 1");
    if (options.batch_size < 1) throw ValidationError("train_model: batch_size must be >= 1");
    for (const auto& s : samples)
        require_same_shape(s.image, s.target, "train_model: image/target");

    const int total = static_cast<int>(samples.size());
    int val_count = static_cast<int>(total * options.val_fraction);
    if (total - val_count < 1) val_count = total - 1;
    const int train_count = total - val_count;

    Adam<float> opt;
    opt.lr = options.lr;
    opt.beta1 = options.beta1;
    opt.beta2 = options.beta2;
    opt.eps = options.adam_eps;

    TrainResult result;
    result.train_count = train_count;
    result.val_count = val_count;

    std::vector<int> order(train_count);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        Rng shuffle_rng(combine_keys(options.seed, 0x5u + static_cast<std::uint64_t>(epoch)));
        for (int i = train_count - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_below(i + 1));
            std::swap(order[i], order[j]);
        }

        EpochStats stats;
        double loss_sum = 0.0, acc_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t lo = 0; lo < order.size(); lo += options.batch_size) {
            const std::size_t hi = std::min(order.size(), lo + options.batch_size);
            Tensor<float> images = stack_batch(samples, order, lo, hi, false);
            Tensor<float> targets = stack_batch(samples, order, lo, hi, true);

            Tape<float> tape;
            const int input = tape.constant(std::move(images));
            const int prob = model.forward_on(tape, input);
            const int loss = ops::bce_loss(tape, prob, targets);
            loss_sum += tape.value(loss).data[0];
            acc_sum += pixel_accuracy(tape.value(prob), targets);
            ++steps;

            model.params().zero_grad();
            tape.backward(loss);
            opt.step(model.params());
        }
        stats.train_loss = loss_sum / static_cast<double>(steps);
        stats.train_accuracy = acc_sum / static_cast<double>(steps);

        if (val_count > 0) {
            double vloss = 0.0, vacc = 0.0;
            for (int i = train_count; i < total; ++i) {
                Tensor<float> prob = model.forward(samples[static_cast<std::size_t>(i)].image);
                const Tensor<float>& target = samples[static_cast<std::size_t>(i)].target;
                vloss += kernels::bce_forward(prob.ptr(), target.ptr(), prob.numel(),
                                              static_cast<float>(kProbEps));
                vacc += pixel_accuracy(prob, target);
            }
            stats.val_loss = vloss / val_count;
            stats.val_accuracy = vacc / val_count;
        }
        result.history.push_back(stats);
    }
    return result;
}

} // namespace lsg
