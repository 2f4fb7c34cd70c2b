use super::Image;

pub const HISTOGRAM_BINS: usize = 32;

/// Per-channel normalised 32-bin intensity histograms over `[0, 1]`, followed
/// by per-channel means and then per-channel population standard deviations.
///
/// Output length is `32 * C + 2 * C`.
pub fn baseline_histogram_features(img: &Image) -> Vec<f32> {
    let c = img.channels;
    let mut counts = vec![0u64; HISTOGRAM_BINS * c];
    let mut sum = vec![0.0f64; c];
    let mut sum_sq = vec![0.0f64; c];
    for px in img.pixels.chunks_exact(c) {
        for (ch, &v) in px.iter().enumerate() {
            let v = f64::from(v).clamp(0.0, 1.0);
            let bin = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
            counts[ch * HISTOGRAM_BINS + bin] += 1;
            sum[ch] += v;
            sum_sq[ch] += v * v;
        }
    }
    let total = (img.height * img.width) as f64;
    let mut out: Vec<f32> = counts.iter().map(|&k| (k as f64 / total) as f32).collect();
    let means: Vec<f64> = sum.iter().map(|s| s / total).collect();
    out.extend(means.iter().map(|&m| m as f32));
    out.extend(
        sum_sq
            .iter()
            .zip(&means)
            .map(|(sq, m)| (sq / total - m * m).max(0.0).sqrt() as f32),
    );
    out
}
