//! Multiplicative image blending through the approximate multiplier and PSNR
//! scoring against the exact blend.

mod io;
mod synth;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::compensator::accelerator_compensation;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::learner::CompensationModel;
use crate::mularray::MultiplierNetlist;
use crate::persist;

pub use io::{load_image, save_image};
pub use synth::{synthetic_pair, synthetic_suite, SYNTH_HEIGHT, SYNTH_WIDTH};

/// One 8-bit color plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageChannel {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageChannel {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "{} pixels do not fill a {width}x{height} channel",
                data.len()
            )));
        }
        Ok(ImageChannel {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        ImageChannel {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    fn same_shape(&self, other: &ImageChannel) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimension(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Three planes in R, G, B order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    channels: [ImageChannel; 3],
}

impl RgbImage {
    pub fn from_channels(channels: [ImageChannel; 3]) -> Result<Self> {
        channels[0].same_shape(&channels[1])?;
        channels[0].same_shape(&channels[2])?;
        Ok(RgbImage { channels })
    }

    /// Splits an interleaved `RGBRGB...` buffer.
    pub fn from_interleaved(width: u32, height: u32, rgb: &[u8]) -> Result<Self> {
        let n = width as usize * height as usize;
        if rgb.len() != 3 * n {
            return Err(Error::Dimension(format!(
                "{} bytes do not fill a {width}x{height} RGB image",
                rgb.len()
            )));
        }
        let plane = |c: usize| rgb.iter().skip(c).step_by(3).copied().collect::<Vec<u8>>();
        Ok(RgbImage {
            channels: [0, 1, 2].map(|c| ImageChannel {
                width,
                height,
                data: plane(c),
            }),
        })
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let [r, g, b] = &self.channels;
        r.data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect()
    }

    pub fn width(&self) -> u32 {
        self.channels[0].width
    }

    pub fn height(&self) -> u32 {
        self.channels[0].height
    }

    pub fn channel(&self, c: usize) -> &ImageChannel {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[ImageChannel; 3] {
        &self.channels
    }
}

/// Which multiplier produces the blend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlendMode {
    Exact,
    Approx,
    CompComponent,
    CompAccelerator,
}

impl BlendMode {
    pub const ALL: [BlendMode; 4] = [
        BlendMode::Exact,
        BlendMode::Approx,
        BlendMode::CompComponent,
        BlendMode::CompAccelerator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlendMode::Exact => "exact",
            BlendMode::Approx => "approx",
            BlendMode::CompComponent => "comp-component",
            BlendMode::CompAccelerator => "comp-accelerator",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(self, BlendMode::CompComponent | BlendMode::CompAccelerator)
    }
}

impl fmt::Display for BlendMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BlendMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown blend mode '{s}' (expected exact, approx, comp-component or comp-accelerator)"
                ))
            })
    }
}

/// `round(p / 255)` half-up, clamped to a pixel.
#[inline]
pub fn normalize_product(p: u32) -> u8 {
    ((p + 127) / 255).min(255) as u8
}

/// Product lookup tables for 8-bit operands, built once from a netlist and an
/// optional model.
#[derive(Debug, Clone)]
pub struct BlendEngine {
    approx: Vec<u32>,
    compensated: Option<Vec<u32>>,
    model: Option<CompensationModel>,
}

const MAX_PRODUCT: i64 = 65535;

impl BlendEngine {
    pub fn new(netlist: &MultiplierNetlist, model: Option<CompensationModel>) -> Result<Self> {
        if netlist.width() != 8 {
            return Err(Error::Config(format!(
                "blending needs an 8-bit multiplier, got width {}",
                netlist.width()
            )));
        }
        if let Some(m) = &model {
            if m.quantizer().width() != 8 {
                return Err(Error::Config(format!(
                    "model quantizes {}-bit operands, blending needs 8",
                    m.quantizer().width()
                )));
            }
        }
        let rows: Vec<Vec<u32>> = (0..256u32)
            .into_par_iter()
            .map(|a| netlist.product_row(a))
            .collect::<Result<_>>()?;
        let approx = rows.concat();
        let compensated = model.as_ref().map(|m| {
            approx
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let c = m.predict_unchecked((k >> 8) as u32, (k & 255) as u32);
                    (p as i64 + c as i64).clamp(0, MAX_PRODUCT) as u32
                })
                .collect()
        });
        Ok(BlendEngine {
            approx,
            compensated,
            model,
        })
    }

    pub fn model(&self) -> Option<&CompensationModel> {
        self.model.as_ref()
    }

    fn require_model(&self, mode: BlendMode) -> Result<&CompensationModel> {
        self.model
            .as_ref()
            .ok_or_else(|| Error::Config(format!("mode {mode} needs a compensation model")))
    }

    /// Multiplies the two channels pixel by pixel under `mode`.
    pub fn blend_channel(
        &self,
        a: &ImageChannel,
        b: &ImageChannel,
        mode: BlendMode,
    ) -> Result<ImageChannel> {
        a.same_shape(b)?;
        let pairs = a.data.par_iter().zip(b.data.par_iter());
        let data: Vec<u8> = match mode {
            BlendMode::Exact => pairs
                .map(|(&x, &y)| normalize_product(x as u32 * y as u32))
                .collect(),
            BlendMode::Approx => pairs
                .map(|(&x, &y)| normalize_product(self.approx[(x as usize) << 8 | y as usize]))
                .collect(),
            BlendMode::CompComponent => {
                self.require_model(mode)?;
                let lut = self.compensated.as_deref().expect("table built with model");
                pairs
                    .map(|(&x, &y)| normalize_product(lut[(x as usize) << 8 | y as usize]))
                    .collect()
            }
            BlendMode::CompAccelerator => {
                let m = self.require_model(mode)?;
                let av: Vec<u32> = a.data.iter().map(|&v| v as u32).collect();
                let bv: Vec<u32> = b.data.iter().map(|&v| v as u32).collect();
                let comp = accelerator_compensation(m, &av, &bv)? as i64;
                pairs
                    .map(|(&x, &y)| {
                        let p = self.approx[(x as usize) << 8 | y as usize] as i64;
                        normalize_product((p + comp).clamp(0, MAX_PRODUCT) as u32)
                    })
                    .collect()
            }
        };
        ImageChannel::new(a.width, a.height, data)
    }

    pub fn blend_rgb(&self, a: &RgbImage, b: &RgbImage, mode: BlendMode) -> Result<RgbImage> {
        let mut out = Vec::with_capacity(3);
        for c in 0..3 {
            out.push(self.blend_channel(&a.channels[c], &b.channels[c], mode)?);
        }
        let channels: [ImageChannel; 3] = out.try_into().expect("three channels");
        RgbImage::from_channels(channels)
    }
}

pub fn blend_channel(
    engine: &BlendEngine,
    a: &ImageChannel,
    b: &ImageChannel,
    mode: BlendMode,
) -> Result<ImageChannel> {
    engine.blend_channel(a, b, mode)
}

fn psnr_bytes(reference: &[u8], test: &[u8]) -> f64 {
    let se: u64 = reference
        .iter()
        .zip(test)
        .map(|(&r, &t)| {
            let d = r as i64 - t as i64;
            (d * d) as u64
        })
        .sum();
    if se == 0 || reference.is_empty() {
        return f64::INFINITY;
    }
    let mse = se as f64 / reference.len() as f64;
    10.0 * (255.0f64 * 255.0 / mse).log10()
}

/// PSNR in dB. Identical channels give `f64::INFINITY`.
pub fn psnr(reference: &ImageChannel, test: &ImageChannel) -> Result<f64> {
    reference.same_shape(test)?;
    Ok(psnr_bytes(&reference.data, &test.data))
}

/// PSNR over the interleaved RGB buffer.
pub fn psnr_rgb(reference: &RgbImage, test: &RgbImage) -> Result<f64> {
    for c in 0..3 {
        reference.channels[c].same_shape(&test.channels[c])?;
    }
    Ok(psnr_bytes(
        &reference.to_interleaved(),
        &test.to_interleaved(),
    ))
}

mod psnr_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("infinite")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "infinite" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad PSNR '{t}'"))),
        }
    }

    pub fn serialize_arr<S: Serializer>(
        v: &[f64; 3],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        struct P(f64);
        impl Serialize for P {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                serialize(&self.0, s)
            }
        }
        let mut t = s.serialize_tuple(3)?;
        for x in v {
            t.serialize_element(&P(*x))?;
        }
        t.end()
    }

    pub fn deserialize_arr<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<[f64; 3], D::Error> {
        #[derive(Deserialize)]
        struct P(#[serde(deserialize_with = "deserialize")] f64);
        let [a, b, c] = <[P; 3]>::deserialize(d)?;
        Ok([a.0, b.0, c.0])
    }
}

pub fn format_psnr(v: f64) -> String {
    if v.is_infinite() {
        "infinite".into()
    } else {
        format!("{v:.4}")
    }
}

/// PSNR of one mode against the exact blend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeQuality {
    pub mode: BlendMode,
    /// R, G, B.
    #[serde(
        serialize_with = "psnr_serde::serialize_arr",
        deserialize_with = "psnr_serde::deserialize_arr"
    )]
    pub channel_psnr: [f64; 3],
    #[serde(with = "psnr_serde")]
    pub rgb_psnr: f64,
    /// Accelerator-level compensation value per channel, when used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shared_compensation: Option<[i32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendReport {
    pub config: RunConfig,
    pub label: String,
    pub width: u32,
    pub height: u32,
    pub modes: Vec<ModeQuality>,
}

impl BlendReport {
    pub fn mode(&self, mode: BlendMode) -> Option<&ModeQuality> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub const CSV_COLUMNS: &'static str = "pair,width,height,mode,psnr_r,psnr_g,psnr_b,psnr_rgb";

    /// One line per mode, no header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for m in &self.modes {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                self.label,
                self.width,
                self.height,
                m.mode,
                format_psnr(m.channel_psnr[0]),
                format_psnr(m.channel_psnr[1]),
                format_psnr(m.channel_psnr[2]),
                format_psnr(m.rgb_psnr)
            );
        }
        s
    }

    /// Header line, column names and the rows of every report.
    pub fn to_csv(config: &RunConfig, reports: &[BlendReport]) -> String {
        let mut s = persist::header_line("blend", config);
        s.push_str(Self::CSV_COLUMNS);
        s.push('\n');
        for r in reports {
            s.push_str(&r.csv_rows());
        }
        s
    }

    pub fn to_json(config: &RunConfig, reports: &[BlendReport]) -> String {
        let mut s = persist::header_line("blend", config);
        s.push_str(&serde_json::to_string_pretty(reports).expect("report serializes"));
        s.push('\n');
        s
    }
}

/// Blends under every mode the engine supports, scores each against the
/// exact blend and returns the image produced by `output_mode`.
pub fn blend_images(
    a: &RgbImage,
    b: &RgbImage,
    engine: &BlendEngine,
    output_mode: BlendMode,
    config: &RunConfig,
    label: &str,
) -> Result<(RgbImage, BlendReport)> {
    for c in 0..3 {
        a.channels[c].same_shape(&b.channels[c])?;
    }
    if output_mode.needs_model() {
        engine.require_model(output_mode)?;
    }
    let exact = engine.blend_rgb(a, b, BlendMode::Exact)?;
    let mut modes = Vec::new();
    let mut output = None;
    for mode in BlendMode::ALL {
        if mode.needs_model() && engine.model.is_none() {
            continue;
        }
        let img = if mode == BlendMode::Exact {
            exact.clone()
        } else {
            engine.blend_rgb(a, b, mode)?
        };
        let mut channel_psnr = [0.0; 3];
        for (c, p) in channel_psnr.iter_mut().enumerate() {
            *p = psnr(&exact.channels[c], &img.channels[c])?;
        }
        let shared_compensation = match (mode, engine.model()) {
            (BlendMode::CompAccelerator, Some(m)) => {
                let mut v = [0i32; 3];
                for (c, slot) in v.iter_mut().enumerate() {
                    let av: Vec<u32> = a.channels[c].data.iter().map(|&x| x as u32).collect();
                    let bv: Vec<u32> = b.channels[c].data.iter().map(|&x| x as u32).collect();
                    *slot = accelerator_compensation(m, &av, &bv)?;
                }
                Some(v)
            }
            _ => None,
        };
        modes.push(ModeQuality {
            mode,
            channel_psnr,
            rgb_psnr: psnr_rgb(&exact, &img)?,
            shared_compensation,
        });
        if mode == output_mode {
            output = Some(img);
        }
    }
    let report = BlendReport {
        config: config.clone(),
        label: label.to_string(),
        width: a.width(),
        height: a.height(),
        modes,
    };
    Ok((output.expect("output mode evaluated"), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{train_tree, CompensationTable, Quantizer};
    use crate::mularray::{build_netlist, MultiplierConfig};

    fn engine(model: Option<CompensationModel>) -> BlendEngine {
        BlendEngine::new(&build_netlist(MultiplierConfig::baseline()).unwrap(), model).unwrap()
    }

    fn biased_model(v: i32) -> CompensationModel {
        let t = CompensationTable::new(16, vec![v; 256]).unwrap();
        let tree = train_tree(&t);
        CompensationModel::new(Quantizer::new(16, 8).unwrap(), t, tree).unwrap()
    }

    fn ramp(w: u32, h: u32, k: u32) -> ImageChannel {
        ImageChannel::new(w, h, (0..w * h).map(|i| ((i * k) % 256) as u8).collect()).unwrap()
    }

    #[test]
    fn normalization_rounds_half_up() {
        assert_eq!(normalize_product(0), 0);
        assert_eq!(normalize_product(127), 0);
        assert_eq!(normalize_product(128), 1);
        assert_eq!(normalize_product(255 * 255), 255);
        assert_eq!(normalize_product(65535), 255);
    }

    #[test]
    fn exact_blend_with_white_is_identity() {
        let e = engine(None);
        let a = ramp(16, 16, 1);
        let white = ImageChannel::filled(16, 16, 255);
        assert_eq!(e.blend_channel(&a, &white, BlendMode::Exact).unwrap(), a);
    }

    #[test]
    fn zero_image_blends_to_zero_after_clamp() {
        let e = engine(Some(biased_model(-40)));
        let a = ramp(8, 8, 7);
        let zero = ImageChannel::filled(8, 8, 0);
        for mode in BlendMode::ALL {
            let out = e.blend_channel(&a, &zero, mode).unwrap();
            assert!(out.data().iter().all(|&p| p == 0), "{mode}");
        }
        // A positive bias survives on a zero operand: 0 + 200 -> round(200/255) = 1.
        let e = engine(Some(biased_model(200)));
        let out = e
            .blend_channel(&a, &zero, BlendMode::CompComponent)
            .unwrap();
        assert!(out.data().iter().all(|&p| p == 1));
    }

    #[test]
    fn approx_blend_matches_per_pixel_netlist() {
        let net = build_netlist(MultiplierConfig::baseline()).unwrap();
        let e = BlendEngine::new(&net, None).unwrap();
        let a = ImageChannel::new(2, 2, vec![255, 200, 13, 99]).unwrap();
        let b = ImageChannel::new(2, 2, vec![255, 10, 11, 180]).unwrap();
        let out = e.blend_channel(&a, &b, BlendMode::Approx).unwrap();
        for k in 0..4 {
            let p = net
                .multiply(a.data()[k] as u32, b.data()[k] as u32)
                .unwrap();
            assert_eq!(out.data()[k], normalize_product(p));
        }
        assert_eq!(out.data(), &[254, 8, 0, 70]);
    }

    #[test]
    fn compensated_modes_need_model() {
        let e = engine(None);
        let a = ramp(4, 4, 3);
        assert!(e.blend_channel(&a, &a, BlendMode::CompComponent).is_err());
        assert!(e
            .blend_channel(&a, &ramp(4, 5, 3), BlendMode::Exact)
            .is_err());
    }

    #[test]
    fn psnr_closed_forms() {
        let a = ImageChannel::filled(10, 10, 100);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = ImageChannel::filled(10, 10, 101);
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-3);
        let z = ImageChannel::filled(3, 3, 0);
        let w = ImageChannel::filled(3, 3, 255);
        assert_eq!(psnr(&z, &w).unwrap(), 0.0);
        assert!(psnr(&a, &z).is_err());
    }

    #[test]
    fn interleave_round_trip() {
        let rgb: Vec<u8> = (0..3 * 6).map(|v| v as u8).collect();
        let img = RgbImage::from_interleaved(3, 2, &rgb).unwrap();
        assert_eq!(img.channel(1).data(), &[1, 4, 7, 10, 13, 16]);
        assert_eq!(img.to_interleaved(), rgb);
        assert!(RgbImage::from_interleaved(3, 3, &rgb).is_err());
    }

    #[test]
    fn report_lists_every_mode() {
        let e = engine(Some(biased_model(30)));
        let (a, b) = synthetic_pair(7, 0, 40, 30);
        let (out, r) =
            blend_images(&a, &b, &e, BlendMode::Exact, &RunConfig::default(), "p0").unwrap();
        assert_eq!(out, e.blend_rgb(&a, &b, BlendMode::Exact).unwrap());
        assert_eq!(r.modes.len(), 4);
        assert_eq!(r.mode(BlendMode::Exact).unwrap().rgb_psnr, f64::INFINITY);
        assert_eq!(
            r.mode(BlendMode::CompAccelerator)
                .unwrap()
                .shared_compensation,
            Some([30; 3])
        );
        let csv = BlendReport::to_csv(&RunConfig::default(), std::slice::from_ref(&r));
        assert_eq!(csv.lines().count(), 2 + 4);
        assert!(csv.contains("p0,40,30,exact,infinite,infinite,infinite,infinite"));
        let json = BlendReport::to_json(&RunConfig::default(), std::slice::from_ref(&r));
        let back: Vec<BlendReport> =
            serde_json::from_str(json.split_once('\n').unwrap().1).unwrap();
        assert_eq!(back[0], r);
    }

    #[test]
    fn mode_names_parse() {
        for m in BlendMode::ALL {
            assert_eq!(m.name().parse::<BlendMode>().unwrap(), m);
        }
        assert!("blend".parse::<BlendMode>().is_err());
    }
}
