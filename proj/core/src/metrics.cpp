#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "geoseg/segnet.hpp"

namespace geoseg {

DiceResult dice(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth,
                int n_classes) {
    if (pred.size() != truth.size()) throw std::invalid_argument("dice: shape mismatch");
    std::vector<long long> np(n_classes, 0), nt(n_classes, 0), ni(n_classes, 0);
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] >= n_classes || truth[i] >= n_classes)
            throw std::invalid_argument("dice: class id out of range");
        np[pred[i]]++;
        nt[truth[i]]++;
        if (pred[i] == truth[i]) ni[pred[i]]++;
    }
    DiceResult r;
    r.per_class.assign(n_classes, -1.0);
    double sum = 0.0;
    int counted = 0;
    for (int c = 0; c < n_classes; ++c) {
        if (np[c] + nt[c] == 0) continue;  // absent from both: excluded from the macro mean
        r.per_class[c] = 2.0 * ni[c] / static_cast<double>(np[c] + nt[c]);
        sum += r.per_class[c];
        ++counted;
    }
    r.macro = counted ? sum / counted : 0.0;
    return r;
}

std::vector<double> distance_transform_sq(const std::vector<char>& mask, int height, int width) {
    const double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> d(static_cast<size_t>(height) * width);
    for (size_t i = 0; i < d.size(); ++i) d[i] = mask[i] ? 0.0 : kInf;

    auto dt1d = [&](std::vector<double>& f, std::vector<double>& out) {
        const int n = static_cast<int>(f.size());
        std::vector<int> v(n);
        std::vector<double> z(n + 1);
        int k = 0;
        v[0] = 0;
        z[0] = -kInf;
        z[1] = kInf;
        for (int q = 1; q < n; ++q) {
            if (f[q] == kInf) continue;
            double s;
            while (true) {
                if (f[v[k]] == kInf) {
                    // the running envelope is empty so far
                    if (k == 0) {
                        v[0] = q;
                        z[0] = -kInf;
                        z[1] = kInf;
                        s = -kInf;
                        break;
                    }
                    --k;
                    continue;
                }
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
                if (s <= z[k]) {
                    --k;
                    continue;
                }
                ++k;
                v[k] = q;
                z[k] = s;
                z[k + 1] = kInf;
                break;
            }
        }
        if (f[v[0]] == kInf) {  // no finite sample at all
            std::fill(out.begin(), out.end(), kInf);
            return;
        }
        k = 0;
        for (int q = 0; q < n; ++q) {
            while (z[k + 1] < q) ++k;
            double dq = q - v[k];
            out[q] = dq * dq + f[v[k]];
        }
    };

    std::vector<double> col(height), colo(height), row(width), rowo(width);
    for (int x = 0; x < width; ++x) {
        for (int y = 0; y < height; ++y) col[y] = d[static_cast<size_t>(y) * width + x];
        dt1d(col, colo);
        for (int y = 0; y < height; ++y) d[static_cast<size_t>(y) * width + x] = colo[y];
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) row[x] = d[static_cast<size_t>(y) * width + x];
        dt1d(row, rowo);
        for (int x = 0; x < width; ++x) d[static_cast<size_t>(y) * width + x] = rowo[x];
    }
    return d;
}

double err_seg(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth, int height,
               int width) {
    if (pred.size() != truth.size() ||
        pred.size() != static_cast<size_t>(height) * static_cast<size_t>(width))
        throw std::invalid_argument("err_seg: shape mismatch");
    int max_class = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        max_class = std::max({max_class, static_cast<int>(pred[i]), static_cast<int>(truth[i])});
    const double diagonal = std::sqrt(static_cast<double>(height) * height +
                                      static_cast<double>(width) * width);
    // one exact distance transform per predicted class that actually occurs
    std::vector<std::vector<double>> dt(max_class + 1);
    std::vector<char> class_used(max_class + 1, 0);
    for (size_t i = 0; i < pred.size(); ++i)
        if (pred[i] != truth[i]) class_used[pred[i]] = 1;
    for (int c = 0; c <= max_class; ++c) {
        if (!class_used[c]) continue;
        std::vector<char> mask(pred.size(), 0);
        bool any = false;
        for (size_t i = 0; i < truth.size(); ++i)
            if (truth[i] == c) {
                mask[i] = 1;
                any = true;
            }
        if (any) dt[c] = distance_transform_sq(mask, height, width);
    }
    double penalty = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == truth[i]) continue;
        const auto& d = dt[pred[i]];
        penalty += d.empty() ? diagonal : std::sqrt(d[i]);
    }
    return 100.0 * penalty / static_cast<double>(pred.size());
}

std::vector<long long> confusion(const std::vector<uint8_t>& pred,
                                 const std::vector<uint8_t>& truth, int n_classes) {
    if (pred.size() != truth.size()) throw std::invalid_argument("confusion: shape mismatch");
    std::vector<long long> m(static_cast<size_t>(n_classes) * n_classes, 0);
    for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] >= n_classes || truth[i] >= n_classes)
            throw std::invalid_argument("confusion: class id out of range");
        m[static_cast<size_t>(truth[i]) * n_classes + pred[i]]++;
    }
    return m;
}

MetricsReport evaluate_seg(SegNet& model, const std::vector<LabeledPatch>& test_set,
                           int patch_px) {
    if (test_set.empty()) throw std::invalid_argument("evaluate_seg: empty test set");
    const int nc = model.n_classes;
    MetricsReport report;
    report.n_classes = nc;
    report.confusion.assign(static_cast<size_t>(nc) * nc, 0);
    std::vector<uint8_t> all_pred, all_truth;
    double errseg_sum = 0.0;
    for (const LabeledPatch& ex : test_set) {
        std::vector<uint8_t> pred = predict(model, ex.image, ex.prior);
        std::vector<uint8_t> truth(ex.labels.begin(), ex.labels.end());
        errseg_sum += err_seg(pred, truth, patch_px, patch_px);
        auto cm = confusion(pred, truth, nc);
        for (size_t i = 0; i < cm.size(); ++i) report.confusion[i] += cm[i];
        all_pred.insert(all_pred.end(), pred.begin(), pred.end());
        all_truth.insert(all_truth.end(), truth.begin(), truth.end());
    }
    DiceResult d = dice(all_pred, all_truth, nc);
    report.per_class_dice = d.per_class;
    report.macro_dice = d.macro;
    report.err_seg = errseg_sum / test_set.size();
    return report;
}

void MetricsReport::save_csv(const std::string& metrics_path, const std::string& confusion_path,
                             const std::string& experiment) const {
    {
        std::ofstream out(metrics_path);
        if (!out) throw std::runtime_error("MetricsReport: cannot open " + metrics_path);
        out << std::setprecision(17);
        out << "experiment,metric,class,value\n";
        for (int c = 0; c < n_classes; ++c)
            if (per_class_dice[c] >= 0)
                out << experiment << ",dice," << c << "," << per_class_dice[c] << "\n";
        out << experiment << ",macro_dice,," << macro_dice << "\n";
        out << experiment << ",err_seg,," << err_seg << "\n";
        if (err_dist >= 0) out << experiment << ",err_dist,," << err_dist << "\n";
    }
    if (!confusion_path.empty()) {
        std::ofstream out(confusion_path);
        if (!out) throw std::runtime_error("MetricsReport: cannot open " + confusion_path);
        for (int i = 0; i < n_classes; ++i) {
            for (int j = 0; j < n_classes; ++j)
                out << (j ? "," : "") << confusion[static_cast<size_t>(i) * n_classes + j];
            out << "\n";
        }
    }
}

}  // namespace geoseg
