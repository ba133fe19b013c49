#pragma once

#include <span>

#include "ucl/tensor.hpp"

// Cosine similarity and the temperature-scaled contrastive objective.
// Embedding batches are [2N, d] with rows 2k and 2k+1 holding the two views
// of sample k.

namespace ucl {

/// The softmax denominator either skips k=i (standard contrastive convention,
/// the default) or sums over every k including the self-similarity term.
enum class DenominatorMode { ExcludeSelf, Literal };

inline DenominatorMode denominator_from_name(const std::string& name) {
    if (name == "exclude_self") return DenominatorMode::ExcludeSelf;
    if (name == "literal") return DenominatorMode::Literal;
    throw ValidationError("denominator: unknown mode '" + name +
                          "' (expected exclude_self|literal)");
}

/// dot(a,b) / max(|a| |b|, eps); zero vectors yield 0 through the clamp.
template <typename T>
T cosine_sim(std::span<const T> a, std::span<const T> b, T eps = T(1e-8)) {
    if (a.size() != b.size())
        throw ValidationError("cosine_sim: vectors of length " + std::to_string(a.size()) +
                              " and " + std::to_string(b.size()));
    if (a.empty()) throw ValidationError("cosine_sim: empty vectors");
    T dot = T(0), na = T(0), nb = T(0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::max(std::sqrt(na) * std::sqrt(nb), eps);
}

template <typename T>
T cosine_sim(const TensorT<T>& a, const TensorT<T>& b, T eps = T(1e-8)) {
    return cosine_sim(std::span<const T>(a.data()), std::span<const T>(b.data()), eps);
}

/// Dense matrix of pairwise cosine similarities between rows of z.
template <typename T>
TensorT<T> similarity_matrix(const TensorT<T>& z, T eps = T(1e-8)) {
    if (z.ndim() != 2) throw ValidationError("similarity_matrix: expects [rows, dim]");
    const std::size_t rows = z.shape()[0], d = z.shape()[1];
    TensorT<T> sim({rows, rows});
    const T* zv = z.data().data();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < rows; ++j)
            sim.data()[i * rows + j] = cosine_sim<T>({zv + i * d, d}, {zv + j * d, d}, eps);
    return sim;
}

/// exp(sim(i,j)/tau) normalized over the row's competitors; sums to one over
/// j != i in the self-excluding mode.
template <typename T>
T pairwise_softmax(const TensorT<T>& sim, std::size_t i, std::size_t j, T tau,
                   DenominatorMode mode = DenominatorMode::ExcludeSelf) {
    if (sim.ndim() != 2 || sim.shape()[0] != sim.shape()[1])
        throw ValidationError("pairwise_softmax: similarity matrix must be square");
    const std::size_t rows = sim.shape()[0];
    if (i >= rows || j >= rows) throw ValidationError("pairwise_softmax: index out of range");
    if (i == j) throw ValidationError("pairwise_softmax: i and j must differ");
    if (!(tau > T(0))) throw ValidationError("pairwise_softmax: temperature must be positive");
    T denom = T(0);
    for (std::size_t k = 0; k < rows; ++k) {
        if (mode == DenominatorMode::ExcludeSelf && k == i) continue;
        denom += std::exp(sim.data()[i * rows + k] / tau);
    }
    return std::exp(sim.data()[i * rows + j] / tau) / denom;
}

/// Embedding batch for the contrastive loss; row count must be even.
template <typename T>
struct EmbeddingBatchT {
    TensorT<T> z; // [2N, proj_dim]
    T temperature = T(0.5);
    T epsilon = T(1e-8);
};

using EmbeddingBatch = EmbeddingBatchT<float>;

/// Mean over the N positive pairs of
///   -log softmax(z_i, z_j) - log softmax(z_j, z_i),
/// built from differentiable primitives end to end.
template <typename T>
TensorT<T> nt_xent_loss(const EmbeddingBatchT<T>& batch,
                        DenominatorMode mode = DenominatorMode::ExcludeSelf) {
    const TensorT<T>& z = batch.z;
    if (z.ndim() != 2) throw ValidationError("nt_xent: embeddings must be [2N, dim]");
    const std::size_t rows = z.shape()[0];
    if (rows < 2 || rows % 2 != 0)
        throw ValidationError("nt_xent: row count " + std::to_string(rows) +
                              " must be even and >= 2");
    if (!(batch.temperature > T(0)))
        throw ValidationError("nt_xent: temperature must be positive, got " +
                              std::to_string(static_cast<double>(batch.temperature)));
    const T eps = batch.epsilon;

    // cosine similarities: clamp both the norm product (the epsilon of the
    // similarity definition) and the squared norms (keeps the gradient of
    // sqrt finite for pathological zero rows)
    TensorT<T> sq = row_sum(z * z);
    TensorT<T> norms = pow(clamp_min(sq, eps * eps), T(0.5));
    TensorT<T> outer = matmul(norms, transpose(norms));
    TensorT<T> sim = matmul(z, transpose(z)) / clamp_min(outer, eps);
    TensorT<T> logits = sim * (T(1) / batch.temperature);

    TensorT<T> competitors = TensorT<T>::ones({rows, rows});
    if (mode == DenominatorMode::ExcludeSelf)
        for (std::size_t i = 0; i < rows; ++i) competitors.data()[i * rows + i] = T(0);
    TensorT<T> positives({rows, rows});
    for (std::size_t k = 0; k < rows / 2; ++k) {
        positives.data()[(2 * k) * rows + (2 * k + 1)] = T(1);
        positives.data()[(2 * k + 1) * rows + (2 * k)] = T(1);
    }

    TensorT<T> denom = row_sum(exp(logits) * competitors); // [2N,1]
    TensorT<T> pos_logit = row_sum(logits * positives);    // [2N,1]
    TensorT<T> per_anchor = log(denom) - pos_logit;
    return sum(per_anchor) * (T(2) / static_cast<T>(rows));
}

template <typename T>
TensorT<T> nt_xent_loss(const TensorT<T>& z, T tau,
                        DenominatorMode mode = DenominatorMode::ExcludeSelf) {
    EmbeddingBatchT<T> batch{z, tau, T(1e-8)};
    return nt_xent_loss(batch, mode);
}

} // namespace ucl
