//! Upper envelope of lines `y = slope * s + intercept` with logarithmic-time
//! maximum queries. This evaluates one-dimensional discrete Legendre-type
//! maxima `max_z (s g(z) - a(z))` exactly.

#[derive(Clone, Debug)]
pub struct LineEnvelope {
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    labels: Vec<usize>,
    /// `breaks[k]` is the abscissa from which line `k + 1` dominates line `k`.
    breaks: Vec<f64>,
}

impl LineEnvelope {
    /// Builds the envelope from `(slope, intercept, label)` triples; lines with
    /// a `-inf` intercept are ignored. Returns `None` when no line remains.
    pub fn new(lines: impl IntoIterator<Item = (f64, f64, usize)>) -> Option<Self> {
        let mut v: Vec<(f64, f64, usize)> = lines.into_iter().filter(|l| l.1 > f64::NEG_INFINITY).collect();
        if v.is_empty() {
            return None;
        }
        // by slope, then best intercept first, then lowest label
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)).then(a.2.cmp(&b.2)));
        v.dedup_by(|later, earlier| later.0 == earlier.0);
        let mut slopes: Vec<f64> = Vec::with_capacity(v.len());
        let mut intercepts: Vec<f64> = Vec::with_capacity(v.len());
        let mut labels: Vec<usize> = Vec::with_capacity(v.len());
        let mut breaks: Vec<f64> = Vec::with_capacity(v.len());
        for (m, b, lab) in v {
            loop {
                let k = slopes.len();
                if k == 0 {
                    break;
                }
                let x = (intercepts[k - 1] - b) / (m - slopes[k - 1]);
                if k >= 2 && x <= breaks[k - 2] {
                    slopes.pop();
                    intercepts.pop();
                    labels.pop();
                    breaks.pop();
                } else {
                    breaks.push(x);
                    break;
                }
            }
            slopes.push(m);
            intercepts.push(b);
            labels.push(lab);
        }
        Some(Self { slopes, intercepts, labels, breaks })
    }

    /// `(max value, label of a maximizing line)` at abscissa `s`.
    #[inline]
    pub fn query(&self, s: f64) -> (f64, usize) {
        let k = self.breaks.partition_point(|&x| x <= s);
        (self.slopes[k] * s + self.intercepts[k], self.labels[k])
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }
}
