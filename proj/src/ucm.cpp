#include "hml/ucm.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace hml {

std::vector<NormalizedTrial> time_normalize(std::span<const TrialRecord> records, std::size_t n_points)
{
    if (n_points < 2) throw std::invalid_argument("time_normalize: need at least two time points");
    std::vector<NormalizedTrial> out;
    out.reserve(records.size());
    for (const TrialRecord& rec : records) {
        const auto& s = rec.samples;
        if (s.size() < 2) throw std::invalid_argument("time_normalize: record has fewer than two samples");
        NormalizedTrial trial(static_cast<Eigen::Index>(n_points), kJoints);
        const double span = double(s.size() - 1);
        for (std::size_t k = 0; k < n_points; ++k) {
            const double pos = span * double(k) / double(n_points - 1);
            const auto lo = std::min(static_cast<std::size_t>(pos), s.size() - 2);
            const double frac = pos - double(lo);
            trial.row(static_cast<Eigen::Index>(k)) = ((1.0 - frac) * s[lo].q + frac * s[lo + 1].q).transpose();
        }
        out.push_back(std::move(trial));
    }
    return out;
}

UcmBasis ucm_basis(const Mapping& c, double threshold)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.transpose());
    qr.setThreshold(threshold);
    const auto rank = qr.rank();
    if (rank != c.rows()) {
        throw std::invalid_argument("ucm: mapping is rank deficient (rank " + std::to_string(rank) + ")");
    }
    const Eigen::MatrixXd q = qr.householderQ();
    return {q.leftCols(rank), q.rightCols(q.cols() - rank)};
}

double UcmSeries::mean_fraction() const
{
    if (fraction.empty()) throw std::invalid_argument("empty UCM series");
    return std::accumulate(fraction.begin(), fraction.end(), 0.0) / double(fraction.size());
}

UcmSeries variance_decompose(std::span<const NormalizedTrial> trials, const Mapping& c)
{
    if (trials.size() < 2) throw std::invalid_argument("variance_decompose: need at least two trials");
    const Eigen::Index n_t = trials.front().rows();
    for (const auto& t : trials) {
        if (t.rows() != n_t) throw std::invalid_argument("variance_decompose: trials differ in length");
    }
    const UcmBasis basis = ucm_basis(c);
    const double dof_ucm = double(basis.null.cols());
    const double dof_ort = double(basis.row.cols());
    const double denom = double(trials.size() - 1);

    UcmSeries out;
    Eigen::Matrix<double, kJoints, Eigen::Dynamic> dev(kJoints, static_cast<Eigen::Index>(trials.size()));
    for (Eigen::Index k = 0; k < n_t; ++k) {
        for (std::size_t i = 0; i < trials.size(); ++i) {
            dev.col(static_cast<Eigen::Index>(i)) = trials[i].row(k).transpose();
        }
        dev.colwise() -= dev.rowwise().mean();
        const double v_ucm = (basis.null.transpose() * dev).squaredNorm() / (dof_ucm * denom);
        const double v_ort = (basis.row.transpose() * dev).squaredNorm() / (dof_ort * denom);
        const double total = v_ucm + v_ort;
        out.t_norm.push_back(n_t > 1 ? double(k) / double(n_t - 1) : 0.0);
        out.v_ucm.push_back(v_ucm);
        out.v_ort.push_back(v_ort);
        // No variability at all: report an even split.
        out.fraction.push_back(total > 0 ? v_ucm / total : 0.5);
    }
    return out;
}

int phase_of_block(int block)
{
    if (block >= 1 && block <= 3) return 1;
    if (block >= 4 && block <= 6) return 2;
    return 0;
}

std::vector<PhaseSummary> phase_aggregate(std::span<const RunUcm> results, std::span<const int> phases)
{
    // (group, phase) -> run -> fractions over pairs
    std::map<std::pair<std::string, int>, std::map<std::size_t, std::vector<double>>> table;
    std::set<std::string> groups;
    for (const RunUcm& r : results) {
        groups.insert(r.series.group);
        table[{r.series.group, r.series.phase}][r.run].push_back(r.series.mean_fraction());
    }

    std::vector<PhaseSummary> out;
    for (const std::string& g : groups) {
        for (int phase : phases) {
            const auto it = table.find({g, phase});
            if (it == table.end()) {
                throw std::invalid_argument("phase_aggregate: no data for group '" + g + "' phase " +
                                            std::to_string(phase));
            }
            std::vector<double> per_run;
            for (const auto& [run, fr] : it->second) {
                per_run.push_back(std::accumulate(fr.begin(), fr.end(), 0.0) / double(fr.size()));
            }
            PhaseSummary s{g, phase, 0.0, 0.0, per_run.size()};
            s.mean = std::accumulate(per_run.begin(), per_run.end(), 0.0) / double(per_run.size());
            if (per_run.size() > 1) {
                double ss = 0.0;
                for (double v : per_run) ss += (v - s.mean) * (v - s.mean);
                s.ci_half_width = 1.96 * std::sqrt(ss / double(per_run.size() - 1)) / std::sqrt(double(per_run.size()));
            }
            out.push_back(s);
        }
    }
    return out;
}

void write_ucm_csv(std::ostream& os, std::span<const UcmSeries> series)
{
    os << "group,phase,pair,t_norm,v_ucm,v_ort,fraction\n";
    os.precision(10);
    for (const UcmSeries& s : series) {
        for (std::size_t k = 0; k < s.t_norm.size(); ++k) {
            os << s.group << ',' << s.phase << ',' << s.pair << ',' << s.t_norm[k] << ',' << s.v_ucm[k] << ','
               << s.v_ort[k] << ',' << s.fraction[k] << '\n';
        }
    }
}

}  // namespace hml
