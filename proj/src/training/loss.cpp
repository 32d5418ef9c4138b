#include "dhbv/training/loss.hpp"

#include "dhbv/data/transform.hpp"

namespace dhbv::train {

Target make_target(const std::vector<Tensor>& observed, bool transform) {
    Target t;
    t.obs.reserve(observed.size());
    t.mask.reserve(observed.size());
    for (const auto& day : observed) {
        Tensor obs = day, mask(day.rows(), day.cols(), 0.0), hat(day.rows(), day.cols(), 0.0);
        for (std::size_t i = 0; i < day.size(); ++i) {
            if (std::isfinite(day[i])) {
                mask[i] = 1.0;
                ++t.valid;
                if (transform) hat[i] = data::flow_transform(day[i]);
            } else {
                obs[i] = 0.0;
            }
        }
        t.obs.push_back(std::move(obs));
        t.mask.push_back(std::move(mask));
        if (transform) t.obs_hat.push_back(std::move(hat));
    }
    return t;
}

}  // namespace dhbv::train
