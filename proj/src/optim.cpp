#include "occlurend/optim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "occlurend/errors.hpp"

namespace occlurend {

void adam_direction(AdamMoments& moments, int64_t step, double beta1, double beta2, double epsilon, double* grad,
                    size_t n) {
    moments.ensure(n);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (size_t i = 0; i < n; ++i) {
        double g = grad[i];
        moments.m[i] = beta1 * moments.m[i] + (1.0 - beta1) * g;
        moments.v[i] = beta2 * moments.v[i] + (1.0 - beta2) * g * g;
        double m_hat = moments.m[i] / bc1;
        double v_hat = moments.v[i] / bc2;
        grad[i] = m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

namespace {

// y = (I + lambda L) x.
void apply_operator(const UniformLaplacian& lap, double lambda, const std::vector<Vec3>& x, std::vector<Vec3>& scratch,
                    std::vector<Vec3>& y) {
    lap.apply(x, scratch);
    y.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] + scratch[i] * lambda;
}

}  // namespace

std::vector<Vec3> solve_preconditioned(const UniformLaplacian& lap, double lambda, const std::vector<Vec3>& g) {
    if (lambda == 0.0) return g;
    size_t n = g.size();
    if (static_cast<int>(n) != lap.n) throw std::runtime_error("preconditioner: gradient size mismatch");

    // Jacobi preconditioner: diagonal of (I + lambda L)^2.
    std::vector<double> inv_diag(n, 1.0);
    for (int i = 0; i < lap.n; ++i) {
        double d = 0.0;
        for (int k = lap.row_offsets[i]; k < lap.row_offsets[i + 1]; ++k) {
            double a = lambda * lap.values[k] + (lap.cols[k] == i ? 1.0 : 0.0);
            d += a * a;
        }
        inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }

    auto apply_a2 = [&](const std::vector<Vec3>& x, std::vector<Vec3>& tmp1, std::vector<Vec3>& tmp2,
                        std::vector<Vec3>& y) {
        apply_operator(lap, lambda, x, tmp1, tmp2);
        apply_operator(lap, lambda, tmp2, tmp1, y);
    };

    std::vector<Vec3> u(n, Vec3(0, 0, 0)), r = g, z(n), p(n), ap(n), tmp1(n), tmp2(n);
    double b_norm2 = 0.0;
    for (const Vec3& v : g) b_norm2 += dot(v, v);
    if (b_norm2 == 0.0) return u;
    double tol2 = 1e-12 * b_norm2;  // relative residual 1e-6, squared

    for (size_t i = 0; i < n; ++i) z[i] = r[i] * inv_diag[i];
    p = z;
    double rz = 0.0;
    for (size_t i = 0; i < n; ++i) rz += dot(r[i], z[i]);

    int64_t max_iter = 10 * static_cast<int64_t>(n);
    for (int64_t it = 0;; ++it) {
        double r_norm2 = 0.0;
        for (const Vec3& v : r) r_norm2 += dot(v, v);
        if (r_norm2 <= tol2) break;
        if (it >= max_iter) throw NumericError("preconditioner: conjugate gradients did not converge");
        apply_a2(p, tmp1, tmp2, ap);
        double pap = 0.0;
        for (size_t i = 0; i < n; ++i) pap += dot(p[i], ap[i]);
        if (pap <= 0.0) throw NumericError("preconditioner: operator lost positive definiteness");
        double alpha = rz / pap;
        for (size_t i = 0; i < n; ++i) {
            u[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        for (size_t i = 0; i < n; ++i) z[i] = r[i] * inv_diag[i];
        double rz_new = 0.0;
        for (size_t i = 0; i < n; ++i) rz_new += dot(r[i], z[i]);
        double beta = rz_new / rz;
        rz = rz_new;
        for (size_t i = 0; i < n; ++i) p[i] = z[i] + p[i] * beta;
    }
    return u;
}

void preconditioned_vertex_step(OptimState& state, const UniformLaplacian& lap, std::vector<Vec3>& vertices,
                                const std::vector<Vec3>& grad) {
    size_t n = vertices.size();
    std::vector<double> flat(3 * n);
    auto flatten = [&](const std::vector<Vec3>& src) {
        for (size_t i = 0; i < n; ++i) {
            flat[3 * i] = src[i].x;
            flat[3 * i + 1] = src[i].y;
            flat[3 * i + 2] = src[i].z;
        }
    };
    auto unflatten = [&](std::vector<Vec3>& dst) {
        dst.resize(n);
        for (size_t i = 0; i < n; ++i) dst[i] = Vec3(flat[3 * i], flat[3 * i + 1], flat[3 * i + 2]);
    };

    std::vector<Vec3> direction;
    if (state.precondition_before_adam) {
        std::vector<Vec3> smoothed = solve_preconditioned(lap, state.lambda_geo, grad);
        flatten(smoothed);
        adam_direction(state.vertices, state.step, state.beta1, state.beta2, state.epsilon, flat.data(), flat.size());
        unflatten(direction);
    } else {
        flatten(grad);
        adam_direction(state.vertices, state.step, state.beta1, state.beta2, state.epsilon, flat.data(), flat.size());
        std::vector<Vec3> adam_out;
        unflatten(adam_out);
        direction = solve_preconditioned(lap, state.lambda_geo, adam_out);
    }
    for (size_t i = 0; i < n; ++i) vertices[i] -= direction[i] * state.lr_vertices;
}

void apply_updates(OptimState& state, const UniformLaplacian& lap, OptimParameters& params, const GradientSet& grads,
                   const FreezeFlags& freeze) {
    ++state.step;
    if (!freeze.vertices) preconditioned_vertex_step(state, lap, params.vertices, grads.vertices);
    auto update_image = [&](AdamMoments& moments, Image& latent, const Image& grad, double lr) {
        std::vector<double> g = grad.data;
        adam_direction(moments, state.step, state.beta1, state.beta2, state.epsilon, g.data(), g.size());
        for (size_t i = 0; i < g.size(); ++i) latent.data[i] -= lr * g[i];
    };
    if (!freeze.albedo) update_image(state.albedo, params.albedo_latent, grads.albedo_latent, state.lr_textures);
    if (!freeze.intensity)
        update_image(state.intensity, params.intensity_latent, grads.intensity_latent, state.lr_textures);
    if (!freeze.roughness)
        update_image(state.roughness, params.roughness_latent, grads.roughness_latent, state.lr_textures);
    if (!freeze.env)
        for (int f = 0; f < 6; ++f) update_image(state.env[f], params.env_latent[f], grads.env_latent[f], state.lr_env);
}

void write_checkpoint(const std::string& dir, const Scene& scene) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_obj(dir + "/mesh.obj", scene.mesh);
    write_pfm(dir + "/albedo.pfm", scene.textures.albedo);
    write_pfm(dir + "/specular.pfm", scene.textures.intensity);
    write_pfm(dir + "/roughness.pfm", scene.textures.roughness);
    write_environment(dir + "/env", scene.env);
}

std::vector<IterationLog> optimize(OptimContext& ctx, OptimParameters& params, OptimState& state,
                                   const OptimizeOptions& options) {
    namespace fs = std::filesystem;
    if (!options.output_dir.empty()) fs::create_directories(options.output_dir);
    std::ofstream log_file;
    if (!options.output_dir.empty()) {
        log_file.open(options.output_dir + "/log.jsonl");
        if (!log_file) throw std::runtime_error("optimize: cannot write log.jsonl");
    }

    Scene& scene = *ctx.scene;
    int n_frames = static_cast<int>(scene.frames.size());
    if (n_frames == 0) throw std::runtime_error("optimize: scene has no frames");

    // Epoch order: uniform without replacement, reshuffled per epoch.
    std::vector<int> order(n_frames);
    std::iota(order.begin(), order.end(), 0);
    Pcg32 shuffle_rng(options.seed, 0x51afful);
    size_t cursor = order.size();  // trigger shuffle on first use
    auto next_batch = [&](int batch_size) {
        std::vector<int> batch;
        for (int i = 0; i < batch_size; ++i) {
            if (cursor >= order.size()) {
                for (size_t j = order.size(); j > 1; --j) {
                    size_t pick = shuffle_rng.next_u32() % j;
                    std::swap(order[j - 1], order[pick]);
                }
                cursor = 0;
            }
            batch.push_back(order[cursor++]);
        }
        return batch;
    };

    std::vector<IterationLog> logs;
    auto emit = [&](int64_t iter, const LossBreakdown& loss) {
        logs.push_back({iter, loss});
        if (log_file) {
            nlohmann::json j = {{"iter", iter},          {"total", loss.total},   {"img", loss.image},
                                {"mask", loss.mask},     {"lap", loss.laplacian}, {"light", loss.light},
                                {"rough", loss.rough},   {"diffuse", loss.diffuse}};
            log_file << j.dump() << "\n";
        }
    };
    auto checkpoint = [&](int64_t iter) {
        if (options.output_dir.empty()) return;
        sync_state(ctx, params);
        write_checkpoint(options.output_dir + "/ckpt_" + std::to_string(iter), scene);
    };

    if (options.iterations == 0) {
        checkpoint(0);
        return logs;
    }

    ctx.assume_geometry_constant = options.freeze.vertices;
    ctx.assume_env_constant = options.freeze.env;
    for (int64_t iter = 0; iter < options.iterations; ++iter) {
        std::vector<int> batch = next_batch(options.batch_size);
        GradientResult result = compute_gradients(ctx, params, batch, static_cast<uint64_t>(iter), options.freeze);
        if (!std::isfinite(result.loss.total)) throw NumericError("optimize: non-finite loss at iteration " +
                                                                        std::to_string(iter));
        emit(iter, result.loss);
        apply_updates(state, ctx.laplacian, params, result.grads, options.freeze);
        if (options.checkpoint_every > 0 && (iter + 1) % options.checkpoint_every == 0 &&
            iter + 1 != options.iterations)
            checkpoint(iter + 1);
    }
    ctx.assume_geometry_constant = false;
    ctx.assume_env_constant = false;
    checkpoint(options.iterations);
    return logs;
}

}  // namespace occlurend
