#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alignet/affine.hpp"
#include "alignet/optim.hpp"
#include "alignet/triplet.hpp"
#include "alignet/types.hpp"

// Student embedding function over fixed input features: an affine head or
// a small MLP, trained with the KL distillation objective plus weight
// decay to initialization.
namespace alignet {

enum class Nonlinearity { identity, gelu };

struct StudentArch {
    std::vector<std::size_t> widths;  // [in, hidden..., out]
    Nonlinearity nonlin = Nonlinearity::gelu;  // applied between layers, never after the last

    std::size_t layers() const { return widths.size() - 1; }
    std::size_t param_count() const;
    void validate() const;
};

struct StudentParams {
    StudentArch arch;
    std::vector<double> theta;
    std::vector<double> theta_init;

    static StudentParams affine_identity(std::size_t p);
    static StudentParams random_init(const StudentArch& arch, std::uint64_t seed);
};

struct DistillConfig {
    double tau_teacher = 1.0;
    double tau_student = 100.0;  // published values: 100 (fine-tuning), 1000 (from scratch)
    double lambda = 0.1;
    OptimConfig optimizer;       // Adam, lr 3e-4
    std::size_t steps = 2000;
    std::size_t batch_size = 1024;
    std::uint64_t seed = 0;
    double val_fraction = 0.1;
    int threads = 1;

    void validate() const;
};

// z = f_theta(x) per row; affine case z = W x + b.
EmbeddingMatrix student_forward(const StudentParams& sp, const EmbeddingMatrix& inputs);

// (1/B) sum KL(p_teacher || softmax(student sims / tau_student)) + lambda ||theta - theta*||^2.
// p_teacher is the dataset's stored soft triple (produced at tau_teacher).
double distill_objective(const StudentParams& sp, const TripletDataset& teacher_labels,
                         const EmbeddingMatrix& inputs, const DistillConfig& cfg);

std::vector<double> distill_gradients(const StudentParams& sp, const TripletDataset& teacher_labels,
                                      const EmbeddingMatrix& inputs, const DistillConfig& cfg);

struct DistillEpochStats {
    std::size_t epoch = 0;
    double objective = 0.0;
    double kl_term = 0.0;
    double reg_term = 0.0;
    double val_agreement = 0.0;  // held-out hard-label agreement with the teacher
};

struct DistillLog {
    std::uint64_t seed = 0;
    std::vector<DistillEpochStats> epochs;
    void save(const std::string& path) const;
};

struct StudentFit {
    StudentParams params;
    DistillLog log;
};

StudentFit train_student(const StudentParams& init, const TripletDataset& dataset,
                         const EmbeddingMatrix& inputs, const DistillConfig& cfg);

StudentParams load_student(const std::string& path);
void save_student(const StudentParams& sp, const std::string& path);

} // namespace alignet
