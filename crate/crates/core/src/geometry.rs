//! Screen-location types and the textual coordinate codec.
//!
//! Locations are stored as fractions of the screenshot width and height.
//! The text form is what grounding models read and write, e.g. `(0.49, 0.40)`
//! for a point or `(0.10, 0.20, 0.30, 0.40)` for a box.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Values this far outside `[0, 1]` are clamped when parsing model output.
pub const CLAMP_BAND: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("{axis} = {value} is outside the valid range [0, {limit})")]
    OutOfRange {
        axis: &'static str,
        value: f64,
        limit: f64,
    },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("pixel dimensions must be positive, got {width}x{height}")]
    EmptyDims { width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse location at byte {offset}: {kind}")]
pub struct LocationParseError {
    pub offset: usize,
    pub kind: LocationParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocationParseErrorKind {
    #[error("no coordinate tuple found")]
    NoTuple,
    #[error("non-numeric token")]
    NonNumeric,
    #[error("expected 2 or 4 values, found {0}")]
    WrongArity(usize),
    #[error("value outside [0, 1]")]
    OutOfRange,
    #[error("box corners out of order")]
    Unordered,
    #[error("expected a point, found a box")]
    NotAPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelDims {
    pub width: u32,
    pub height: u32,
}

impl PixelDims {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyDims { width, height });
        }
        Ok(Self { width, height })
    }
}

impl fmt::Display for PixelDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// A point in pixel space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

/// A box in pixel space, `(left, top, right, down)` with exclusive right/down edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct PixelBBox {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub down: f64,
}

impl PixelBBox {
    pub fn new(left: f64, top: f64, right: f64, down: f64) -> Self {
        Self {
            left,
            top,
            right,
            down,
        }
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.down - self.top
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_ordered(&self) -> bool {
        self.left <= self.right && self.top <= self.down
    }

    /// True when the box lies within `[0, width] x [0, height]`.
    pub fn fits_in(&self, dims: PixelDims) -> bool {
        self.is_ordered()
            && self.left >= 0.0
            && self.top >= 0.0
            && self.right <= f64::from(dims.width)
            && self.down <= f64::from(dims.height)
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint {
            x: (self.left + self.right) / 2.0,
            y: (self.top + self.down) / 2.0,
        }
    }

    /// Normalizes by the image dimensions. The box must fit inside the image.
    pub fn normalize(&self, dims: PixelDims) -> Result<NormBBox, GeometryError> {
        if !self.fits_in(dims) {
            return Err(GeometryError::InvalidBox(format!(
                "{self:?} does not fit in {dims}"
            )));
        }
        let w = f64::from(dims.width);
        let h = f64::from(dims.height);
        NormBBox::new(self.left / w, self.top / h, self.right / w, self.down / h)
    }
}

impl From<[f64; 4]> for PixelBBox {
    fn from(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<PixelBBox> for [f64; 4] {
    fn from(b: PixelBBox) -> Self {
        [b.left, b.top, b.right, b.down]
    }
}

/// A point as fractions of the screen width and height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct NormPoint {
    x: f64,
    y: f64,
}

impl NormPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn to_pixels(&self, dims: PixelDims) -> PixelPoint {
        PixelPoint {
            x: self.x * f64::from(dims.width),
            y: self.y * f64::from(dims.height),
        }
    }

    /// Snaps both components to the nearest two-decimal value.
    pub fn quantized(&self) -> NormPoint {
        NormPoint {
            x: quantize(self.x),
            y: quantize(self.y),
        }
    }
}

impl TryFrom<[f64; 2]> for NormPoint {
    type Error = GeometryError;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        NormPoint::new(v[0], v[1])
    }
}

impl From<NormPoint> for [f64; 2] {
    fn from(p: NormPoint) -> Self {
        [p.x, p.y]
    }
}

/// A box `(left, top, right, down)` as fractions of the screen size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct NormBBox {
    left: f64,
    top: f64,
    right: f64,
    down: f64,
}

impl NormBBox {
    pub fn new(left: f64, top: f64, right: f64, down: f64) -> Result<Self, GeometryError> {
        check_unit("left", left)?;
        check_unit("top", top)?;
        check_unit("right", right)?;
        check_unit("down", down)?;
        if left > right || top > down {
            return Err(GeometryError::InvalidBox(format!(
                "({left}, {top}, {right}, {down}) has corners out of order"
            )));
        }
        Ok(Self {
            left,
            top,
            right,
            down,
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn down(&self) -> f64 {
        self.down
    }

    pub fn area(&self) -> f64 {
        (self.right - self.left) * (self.down - self.top)
    }

    pub fn contains(&self, p: NormPoint) -> bool {
        point_in_bbox(p, *self)
    }

    pub fn center(&self) -> NormPoint {
        bbox_center(*self)
    }

    pub fn to_pixels(&self, dims: PixelDims) -> PixelBBox {
        let w = f64::from(dims.width);
        let h = f64::from(dims.height);
        PixelBBox::new(self.left * w, self.top * h, self.right * w, self.down * h)
    }

    /// The two-decimal point closest to the box center that still lies inside
    /// the box, or `None` when the box is too thin to contain one.
    pub fn grid_anchor(&self) -> Option<NormPoint> {
        let x = grid_value_within(self.left, self.right, (self.left + self.right) / 2.0)?;
        let y = grid_value_within(self.top, self.down, (self.top + self.down) / 2.0)?;
        Some(NormPoint { x, y })
    }
}

impl TryFrom<[f64; 4]> for NormBBox {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        NormBBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<NormBBox> for [f64; 4] {
    fn from(b: NormBBox) -> Self {
        [b.left, b.top, b.right, b.down]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Point(NormPoint),
    BBox(NormBBox),
}

impl Location {
    /// The point a click would land on: the point itself, or a box's center.
    pub fn click_point(&self) -> NormPoint {
        match self {
            Location::Point(p) => *p,
            Location::BBox(b) => b.center(),
        }
    }
}

impl From<NormPoint> for Location {
    fn from(p: NormPoint) -> Self {
        Location::Point(p)
    }
}

impl From<NormBBox> for Location {
    fn from(b: NormBBox) -> Self {
        Location::BBox(b)
    }
}

/// A location in its canonical text form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationText(String);

impl LocationText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn parse(&self) -> Result<Location, LocationParseError> {
        parse_location(&self.0)
    }
}

impl fmt::Display for LocationText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for LocationText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn check_unit(axis: &'static str, value: f64) -> Result<(), GeometryError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(GeometryError::OutOfRange {
            axis,
            value,
            limit: 1.0,
        });
    }
    Ok(())
}

fn quantize(v: f64) -> f64 {
    let hundredths: u32 = round_hundredths(v);
    f64::from(hundredths) / 100.0
}

fn grid_value_within(lo: f64, hi: f64, center: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    let first = (lo * 100.0).floor() as i64 - 1;
    let last = (hi * 100.0).ceil() as i64 + 1;
    for k in first.max(0)..=last.min(100) {
        let v = k as f64 / 100.0;
        if v < lo || v > hi {
            continue;
        }
        let d = (v - center).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((v, d));
        }
    }
    best.map(|(v, _)| v)
}

/// Converts a pixel position to screen fractions.
pub fn normalize_point(p: PixelPoint, dims: PixelDims) -> Result<NormPoint, GeometryError> {
    let w = f64::from(dims.width);
    let h = f64::from(dims.height);
    if !(p.x >= 0.0 && p.x < w) {
        return Err(GeometryError::OutOfRange {
            axis: "x",
            value: p.x,
            limit: w,
        });
    }
    if !(p.y >= 0.0 && p.y < h) {
        return Err(GeometryError::OutOfRange {
            axis: "y",
            value: p.y,
            limit: h,
        });
    }
    Ok(NormPoint {
        x: p.x / w,
        y: p.y / h,
    })
}

/// Rounds a unit-interval value to hundredths, half away from zero.
///
/// Rounding is done on the shortest decimal representation of the value, so
/// `0.015` becomes `0.02` even though its binary form is slightly below it.
fn round_hundredths(v: f64) -> u32 {
    let text = format!("{v}");
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text.as_str(), ""),
    };
    let int: u32 = int_part.parse().unwrap_or(0);
    let digits: Vec<u32> = frac_part
        .bytes()
        .map(|b| u32::from(b - b'0'))
        .chain(std::iter::repeat(0))
        .take(3)
        .collect();
    let mut hundredths = int * 100 + digits[0] * 10 + digits[1];
    if digits[2] >= 5 {
        hundredths += 1;
    }
    hundredths
}

fn write_fixed2(out: &mut String, v: f64) {
    let h = round_hundredths(v);
    out.push_str(&format!("{}.{:02}", h / 100, h % 100));
}

/// Renders a location with exactly two decimals per component.
pub fn format_location(loc: &Location) -> LocationText {
    let values: Vec<f64> = match loc {
        Location::Point(p) => vec![p.x, p.y],
        Location::BBox(b) => vec![b.left, b.top, b.right, b.down],
    };
    let mut out = String::with_capacity(2 + values.len() * 6);
    out.push('(');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_fixed2(&mut out, *v);
    }
    out.push(')');
    LocationText(out)
}

pub fn format_point(p: NormPoint) -> LocationText {
    format_location(&Location::Point(p))
}

pub fn format_bbox(b: NormBBox) -> LocationText {
    format_location(&Location::BBox(b))
}

/// Reads the first well-formed coordinate tuple out of free text.
///
/// Two values make a point and four a box. Any decimal precision is accepted,
/// as is a missing leading zero (`.4`). Values up to [`CLAMP_BAND`] outside
/// `[0, 1]` are clamped; anything further out is rejected. When no tuple in
/// the text is usable, the error describes the first one attempted.
pub fn parse_location(text: &str) -> Result<Location, LocationParseError> {
    let mut first_err: Option<LocationParseError> = None;
    for (offset, _) in text.match_indices('(') {
        match parse_tuple_at(text, offset) {
            Ok((loc, _)) => return Ok(loc),
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    Err(first_err.unwrap_or(LocationParseError {
        offset: text.len(),
        kind: LocationParseErrorKind::NoTuple,
    }))
}

/// Like [`parse_location`] but accepts only points.
pub fn parse_point(text: &str) -> Result<NormPoint, LocationParseError> {
    let offset = text.find('(').unwrap_or(0);
    match parse_location(text)? {
        Location::Point(p) => Ok(p),
        Location::BBox(_) => Err(LocationParseError {
            offset,
            kind: LocationParseErrorKind::NotAPoint,
        }),
    }
}

/// Parses a tuple that starts exactly at `offset` (which must hold `(`).
/// Returns the location and the byte offset just past the closing paren.
pub(crate) fn parse_tuple_at(
    text: &str,
    offset: usize,
) -> Result<(Location, usize), LocationParseError> {
    let bytes = text.as_bytes();
    debug_assert_eq!(bytes.get(offset), Some(&b'('));
    let err = |at: usize, kind| LocationParseError { offset: at, kind };
    let mut pos = offset + 1;
    let mut values = Vec::with_capacity(4);
    loop {
        pos = skip_ws(bytes, pos);
        let (value, next) =
            scan_number(text, pos).ok_or(err(pos, LocationParseErrorKind::NonNumeric))?;
        if !(-CLAMP_BAND..=1.0 + CLAMP_BAND).contains(&value) {
            return Err(err(pos, LocationParseErrorKind::OutOfRange));
        }
        values.push(value.clamp(0.0, 1.0));
        pos = skip_ws(bytes, next);
        match bytes.get(pos) {
            Some(b',') => pos += 1,
            Some(b')') => {
                pos += 1;
                break;
            }
            _ => return Err(err(pos, LocationParseErrorKind::NonNumeric)),
        }
        if values.len() > 4 {
            return Err(err(
                offset,
                LocationParseErrorKind::WrongArity(values.len()),
            ));
        }
    }
    let loc = match values[..] {
        [x, y] => Location::Point(NormPoint { x, y }),
        [l, t, r, d] => {
            if l > r || t > d {
                return Err(err(offset, LocationParseErrorKind::Unordered));
            }
            Location::BBox(NormBBox {
                left: l,
                top: t,
                right: r,
                down: d,
            })
        }
        _ => {
            return Err(err(
                offset,
                LocationParseErrorKind::WrongArity(values.len()),
            ))
        }
    };
    Ok((loc, pos))
}

fn skip_ws(bytes: &[u8], mut pos: usize) -> usize {
    while bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        pos += 1;
    }
    pos
}

/// Scans `[+-]? digits? ('.' digits?)?` with at least one digit.
fn scan_number(text: &str, start: usize) -> Option<(f64, usize)> {
    let bytes = text.as_bytes();
    let mut pos = start;
    if matches!(bytes.get(pos), Some(b'+' | b'-')) {
        pos += 1;
    }
    let int_start = pos;
    while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
        pos += 1;
    }
    let mut digits = pos - int_start;
    if bytes.get(pos) == Some(&b'.') {
        pos += 1;
        let frac_start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        digits += pos - frac_start;
    }
    if digits == 0 {
        return None;
    }
    text[start..pos].parse().ok().map(|v| (v, pos))
}

/// Closed-interval membership: points on an edge count as inside.
pub fn point_in_bbox(p: NormPoint, b: NormBBox) -> bool {
    b.left <= p.x && p.x <= b.right && b.top <= p.y && p.y <= b.down
}

pub fn bbox_center(b: NormBBox) -> NormPoint {
    NormPoint {
        x: (b.left + b.right) / 2.0,
        y: (b.top + b.down) / 2.0,
    }
}

/// Euclidean distance in normalized units.
pub fn point_distance(a: NormPoint, b: NormPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> NormPoint {
        NormPoint::new(x, y).unwrap()
    }

    fn bb(l: f64, t: f64, r: f64, d: f64) -> NormBBox {
        NormBBox::new(l, t, r, d).unwrap()
    }

    fn dims(w: u32, h: u32) -> PixelDims {
        PixelDims::new(w, h).unwrap()
    }

    #[test]
    fn normalize_midpoint_and_origin() {
        let p = normalize_point(PixelPoint { x: 960.0, y: 540.0 }, dims(1920, 1080)).unwrap();
        assert_eq!((p.x(), p.y()), (0.5, 0.5));
        let o = normalize_point(PixelPoint { x: 0.0, y: 0.0 }, dims(7, 3)).unwrap();
        assert_eq!((o.x(), o.y()), (0.0, 0.0));
    }

    #[test]
    fn normalize_last_pixel_matches_exact_division() {
        use num_bigint::BigInt;
        use num_rational::BigRational;
        use num_traits::Signed;
        // The f64 result must be the correctly rounded value of 1919/1920.
        let p = normalize_point(
            PixelPoint {
                x: 1919.0,
                y: 1079.0,
            },
            dims(1920, 1080),
        )
        .unwrap();
        for (got, num, den) in [(p.x(), 1919, 1920), (p.y(), 1079, 1080)] {
            let exact = BigRational::new(BigInt::from(num), BigInt::from(den));
            let as_rational = BigRational::from_float(got).unwrap();
            let err = (as_rational - exact.clone()).abs();
            let ulp = BigRational::from_float(f64::EPSILON / 2.0).unwrap() * exact;
            assert!(err <= ulp, "{got} is not the rounded quotient {num}/{den}");
        }
        assert!((p.x() - 0.999_479_166_666).abs() < 1e-9);
        assert!((p.y() - 0.999_074_074_074).abs() < 1e-9);
    }

    #[test]
    fn normalize_rejects_out_of_bounds_axis() {
        let e = normalize_point(PixelPoint { x: 1920.0, y: 0.0 }, dims(1920, 1080)).unwrap_err();
        assert!(matches!(e, GeometryError::OutOfRange { axis: "x", .. }));
        let e = normalize_point(PixelPoint { x: 5.0, y: -1.0 }, dims(1920, 1080)).unwrap_err();
        assert!(matches!(e, GeometryError::OutOfRange { axis: "y", .. }));
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_point(pt(0.49, 0.40)).as_str(), "(0.49, 0.40)");
        assert_eq!(format_point(pt(0.0, 0.0)).as_str(), "(0.00, 0.00)");
        assert_eq!(
            format_bbox(bb(0.1, 0.2, 0.3, 0.4)).as_str(),
            "(0.10, 0.20, 0.30, 0.40)"
        );
        assert_eq!(format_point(pt(1.0, 0.995)).as_str(), "(1.00, 1.00)");
    }

    #[test]
    fn rounding_is_half_away_from_zero_on_decimal_value() {
        assert_eq!(format_point(pt(0.015, 0.125)).as_str(), "(0.02, 0.13)");
        assert_eq!(format_point(pt(0.0149, 0.994999)).as_str(), "(0.01, 0.99)");
        assert_eq!(format_point(pt(1e-7, 0.005)).as_str(), "(0.00, 0.01)");
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_location("click (0.49, 0.40)").unwrap(),
            Location::Point(pt(0.49, 0.40))
        );
        assert_eq!(
            parse_location("(1.00, 1.00)").unwrap(),
            Location::Point(pt(1.0, 1.0))
        );
        assert_eq!(
            parse_location("(0.495, .4)").unwrap(),
            Location::Point(pt(0.495, 0.4))
        );
        assert_eq!(
            parse_location("box: (0.1,0.2 ,0.3, 0.4).").unwrap(),
            Location::BBox(bb(0.1, 0.2, 0.3, 0.4))
        );
    }

    #[test]
    fn parse_clamps_small_overshoot() {
        assert_eq!(
            parse_location("(1.008, -0.01)").unwrap(),
            Location::Point(pt(1.0, 0.0))
        );
    }

    #[test]
    fn parse_errors_carry_offsets() {
        let e = parse_location("go (1.02, 0.5)").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::OutOfRange);
        assert_eq!(e.offset, 4);

        let e = parse_location("(0.1, abc)").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::NonNumeric);
        assert_eq!(e.offset, 6);

        let e = parse_location("(0.1, 0.2, 0.3)").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::WrongArity(3));

        let e = parse_location("nothing here").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::NoTuple);

        let e = parse_location("(0.5, 0.5, 0.1, 0.9)").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::Unordered);
    }

    #[test]
    fn parse_skips_prose_parentheses() {
        let loc = parse_location("I think (the icon) is at (0.20, 0.30)").unwrap();
        assert_eq!(loc, Location::Point(pt(0.2, 0.3)));
    }

    #[test]
    fn parse_point_rejects_boxes() {
        let e = parse_point("(0.1, 0.2, 0.3, 0.4)").unwrap_err();
        assert_eq!(e.kind, LocationParseErrorKind::NotAPoint);
    }

    #[test]
    fn membership_is_closed() {
        let b = bb(0.4, 0.4, 0.6, 0.6);
        assert!(point_in_bbox(pt(0.5, 0.5), b));
        assert!(point_in_bbox(pt(0.4, 0.4), b));
        assert!(point_in_bbox(pt(0.6, 0.6), b));
        assert!(!point_in_bbox(pt(0.39, 0.5), b));
    }

    #[test]
    fn centers_and_distances() {
        assert_eq!(bbox_center(bb(0.4, 0.4, 0.6, 0.6)), pt(0.5, 0.5));
        assert_eq!(bbox_center(bb(0.0, 0.0, 1.0, 1.0)), pt(0.5, 0.5));
        let c = bbox_center(bb(0.10, 0.20, 0.30, 0.40));
        assert!((c.x() - 0.2).abs() < 1e-15 && (c.y() - 0.3).abs() < 1e-15);

        assert_eq!(point_distance(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
        assert!((point_distance(pt(0.0, 0.0), pt(1.0, 1.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert!((point_distance(pt(0.3, 0.4), pt(0.0, 0.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_anchor_stays_inside_thin_boxes() {
        let thin = bb(0.1234, 0.5, 0.1301, 0.52);
        let a = thin.grid_anchor().unwrap();
        assert!(thin.contains(a));
        assert_eq!(format_point(a).as_str(), "(0.13, 0.51)");
        assert!(bb(0.1211, 0.5, 0.1299, 0.52).grid_anchor().is_none());
    }

    #[test]
    fn pixel_box_normalization() {
        let b = PixelBBox::new(10.0, 10.0, 90.0, 40.0)
            .normalize(dims(1920, 1080))
            .unwrap();
        assert!((b.left() - 0.0052).abs() < 1e-4);
        assert!((b.top() - 0.0093).abs() < 1e-4);
        assert!((b.right() - 0.0469).abs() < 1e-4);
        assert!((b.down() - 0.0370).abs() < 1e-4);
        assert!(PixelBBox::new(0.0, 0.0, 1921.0, 5.0)
            .normalize(dims(1920, 1080))
            .is_err());
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0..=1.0f64
    }

    fn any_bbox() -> impl Strategy<Value = NormBBox> {
        (unit(), unit(), unit(), unit())
            .prop_map(|(a, b, c, d)| NormBBox::new(a.min(c), b.min(d), a.max(c), b.max(d)).unwrap())
    }

    fn grammar_ok(s: &str, n: usize) -> bool {
        let inner = s.strip_prefix('(').and_then(|s| s.strip_suffix(')'));
        let Some(inner) = inner else { return false };
        let parts: Vec<&str> = inner.split(", ").collect();
        parts.len() == n
            && parts.iter().all(|p| {
                let b = p.as_bytes();
                b.len() == 4
                    && b[0].is_ascii_digit()
                    && b[1] == b'.'
                    && b[2].is_ascii_digit()
                    && b[3].is_ascii_digit()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn point_round_trip_within_quantization(x in unit(), y in unit()) {
            let p = pt(x, y);
            let text = format_point(p);
            prop_assert!(grammar_ok(text.as_str(), 2), "{}", text);
            let back = parse_point(text.as_str()).unwrap();
            prop_assert!((back.x() - x).abs() <= 0.005 + 1e-12);
            prop_assert!((back.y() - y).abs() <= 0.005 + 1e-12);
        }

        #[test]
        fn bbox_round_trip_within_quantization(b in any_bbox()) {
            let text = format_bbox(b);
            prop_assert!(grammar_ok(text.as_str(), 4), "{}", text);
            let Location::BBox(back) = parse_location(text.as_str()).unwrap() else {
                panic!("expected a box");
            };
            for (got, want) in [(back.left(), b.left()), (back.top(), b.top()), (back.right(), b.right()), (back.down(), b.down())] {
                prop_assert!((got - want).abs() <= 0.005 + 1e-12);
            }
        }

        #[test]
        fn center_is_inside(b in any_bbox()) {
            prop_assume!(b.area() > 0.0);
            prop_assert!(point_in_bbox(bbox_center(b), b));
        }

        #[test]
        fn normalize_then_denormalize(w in 1u32..8000, h in 1u32..8000, fx in 0.0..1.0f64, fy in 0.0..1.0f64) {
            let d = dims(w, h);
            let px = (fx * f64::from(w)).floor();
            let py = (fy * f64::from(h)).floor();
            let n = normalize_point(PixelPoint { x: px, y: py }, d).unwrap();
            let back = n.to_pixels(d);
            prop_assert!((back.x - px).abs() <= 1e-9 * px.max(1.0));
            prop_assert!((back.y - py).abs() <= 1e-9 * py.max(1.0));
        }
    }
}
