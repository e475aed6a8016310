#pragma once

#include <cstring>
#include <vector>

#include "promo/common.hpp"

namespace promo {

/// Dense row-major matrix over a scalar type (float for the production
/// engine, double for gradient-check oracles).
template <typename T>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int r, int c, T fill = T(0)) : rows(r), cols(c), a(size_t(r) * c, fill) {}

    T* row(int i) { return a.data() + size_t(i) * cols; }
    const T* row(int i) const { return a.data() + size_t(i) * cols; }
    T& at(int i, int j) { return a[size_t(i) * cols + j]; }
    T at(int i, int j) const { return a[size_t(i) * cols + j]; }
    size_t size() const { return a.size(); }
    void zero() { std::memset(a.data(), 0, a.size() * sizeof(T)); }

    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

// C += A * B. ikj order with k unrolled by 4: each C element accumulates
// the k-blocks in ascending order, so per-element results depend only on
// K, not on how many rows a call processes.
template <typename T>
void gemm_nn_acc(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    check(A.cols == B.rows && A.rows == C.rows && B.cols == C.cols, "gemm_nn: shape mismatch");
    const int K = A.cols, N = B.cols;
    const int K4 = K - K % 4;
    for (int i = 0; i < A.rows; ++i) {
        T* ci = C.row(i);
        const T* ai = A.row(i);
        for (int k = 0; k < K4; k += 4) {
            const T a0 = ai[k], a1 = ai[k + 1], a2 = ai[k + 2], a3 = ai[k + 3];
            const T* b0 = B.row(k);
            const T* b1 = B.row(k + 1);
            const T* b2 = B.row(k + 2);
            const T* b3 = B.row(k + 3);
            for (int j = 0; j < N; ++j)
                ci[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
        }
        for (int k = K4; k < K; ++k) {
            const T aik = ai[k];
            const T* bk = B.row(k);
            for (int j = 0; j < N; ++j) ci[j] += aik * bk[j];
        }
    }
}

template <typename T>
Mat<T> gemm_nn(const Mat<T>& A, const Mat<T>& B) {
    Mat<T> C(A.rows, B.cols);
    gemm_nn_acc(A, B, C);
    return C;
}

template <typename T>
Mat<T> transpose(const Mat<T>& A) {
    Mat<T> B(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) B.at(j, i) = A.at(i, j);
    return B;
}

// C = A * B^T, computed as A * transpose(B) through the ikj kernel: the
// inner loop runs over the wide output dimension, and each element still
// accumulates in ascending-k order regardless of the number of A rows.
template <typename T>
void gemm_nt_into(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    check(A.cols == B.cols, "gemm_nt: inner dim mismatch");
    const Mat<T> Bt = transpose(B);
    C = Mat<T>(A.rows, B.rows);
    gemm_nn_acc(A, Bt, C);
}

template <typename T>
Mat<T> gemm_nt(const Mat<T>& A, const Mat<T>& B) {
    Mat<T> C;
    gemm_nt_into(A, B, C);
    return C;
}

// C += A^T * B (dW accumulation: A = upstream grads S x out, B = inputs
// S x in). Runs as transpose(A) * B; per-element accumulation stays in
// ascending row order, identical to the direct loop.
template <typename T>
void gemm_tn_acc(const Mat<T>& A, const Mat<T>& B, Mat<T>& C) {
    check(A.rows == B.rows && A.cols == C.rows && B.cols == C.cols, "gemm_tn: shape mismatch");
    const Mat<T> At = transpose(A);
    gemm_nn_acc(At, B, C);
}

template <typename T>
void add_rowvec(Mat<T>& A, const std::vector<T>& v) {
    check(int(v.size()) == A.cols, "add_rowvec: size mismatch");
    for (int i = 0; i < A.rows; ++i) {
        T* ai = A.row(i);
        for (int j = 0; j < A.cols; ++j) ai[j] += v[j];
    }
}

template <typename T>
void colsum_acc(const Mat<T>& A, std::vector<T>& out) {
    check(int(out.size()) == A.cols, "colsum: size mismatch");
    for (int i = 0; i < A.rows; ++i) {
        const T* ai = A.row(i);
        for (int j = 0; j < A.cols; ++j) out[j] += ai[j];
    }
}

}  // namespace promo
