//! Geodetic-to-local geometry.
//!
//! Campaign areas span a few kilometres around a single site, so positions are
//! projected onto an equirectangular tangent plane at the site, using the
//! WGS84 meridian and prime-vertical radii of curvature at the origin
//! latitude. Over a 5 km radius the projection error stays well below the
//! 5 m binning resolution.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

const WGS84_A: f64 = 6_378_137.0;
const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// Largest latitude offset from the origin accepted by [`to_local`].
pub const MAX_LOCAL_SPAN_DEG: f64 = 1.0;

pub const DEFAULT_GRID_SIZE: f64 = 5.0;

fn wgs84_e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

/// Meridian and prime-vertical radii of curvature at `lat_rad`.
fn radii_of_curvature(lat_rad: f64) -> (f64, f64) {
    let e2 = wgs84_e2();
    let w2 = 1.0 - e2 * lat_rad.sin().powi(2);
    let meridian = WGS84_A * (1.0 - e2) / w2.powf(1.5);
    let prime_vertical = WGS84_A / w2.sqrt();
    (meridian, prime_vertical)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodeticPoint {
    /// Degrees, WGS84.
    pub latitude: f64,
    /// Degrees, WGS84.
    pub longitude: f64,
    /// Meters above ground.
    #[serde(default)]
    pub altitude_agl: f64,
}

impl GeodeticPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self> {
        let p = GeodeticPoint {
            latitude,
            longitude,
            altitude_agl: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_altitude(mut self, altitude_agl: f64) -> Self {
        self.altitude_agl = altitude_agl;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::validation(
                "latitude",
                format!("{} outside [-90, 90]", self.latitude),
            ));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::validation(
                "longitude",
                format!("{} outside [-180, 180]", self.longitude),
            ));
        }
        if !self.altitude_agl.is_finite() {
            return Err(Error::validation("altitude_agl", "not finite"));
        }
        Ok(())
    }
}

/// East-north-up offset from a projection origin, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocalPoint {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint {
        east: 0.0,
        north: 0.0,
        up: 0.0,
    };

    pub fn new(east: f64, north: f64, up: f64) -> Self {
        LocalPoint { east, north, up }
    }

    /// Horizontal point at `distance` meters along `bearing_deg` (clockwise from north).
    pub fn from_polar(distance: f64, bearing_deg: f64) -> Self {
        let b = bearing_deg.to_radians();
        LocalPoint::new(distance * b.sin(), distance * b.cos(), 0.0)
    }

    pub fn horizontal_norm(&self) -> f64 {
        self.east.hypot(self.north)
    }
}

/// Projects `p` onto the tangent plane at `origin`.
pub fn to_local(origin: &GeodeticPoint, p: &GeodeticPoint) -> Result<LocalPoint> {
    origin.validate()?;
    p.validate()?;
    let dlat = p.latitude - origin.latitude;
    if dlat.abs() >= MAX_LOCAL_SPAN_DEG {
        return Err(Error::validation(
            "latitude",
            format!("{dlat:.4} deg from origin exceeds the tangent-plane span"),
        ));
    }
    // Shortest signed longitude difference, so sites near the antimeridian work.
    let dlon = (p.longitude - origin.longitude + 540.0).rem_euclid(360.0) - 180.0;
    let lat0 = origin.latitude.to_radians();
    let (m, n) = radii_of_curvature(lat0);
    Ok(LocalPoint {
        east: n * lat0.cos() * dlon.to_radians(),
        north: m * dlat.to_radians(),
        up: p.altitude_agl - origin.altitude_agl,
    })
}

/// Inverse of [`to_local`].
pub fn from_local(origin: &GeodeticPoint, p: &LocalPoint) -> Result<GeodeticPoint> {
    origin.validate()?;
    let lat0 = origin.latitude.to_radians();
    let (m, n) = radii_of_curvature(lat0);
    let cos_lat = lat0.cos();
    if cos_lat.abs() < 1e-12 {
        return Err(Error::domain("tangent plane undefined at the poles"));
    }
    let latitude = origin.latitude + (p.north / m).to_degrees();
    let mut longitude = origin.longitude + (p.east / (n * cos_lat)).to_degrees();
    if longitude > 180.0 {
        longitude -= 360.0;
    } else if longitude < -180.0 {
        longitude += 360.0;
    }
    let out = GeodeticPoint {
        latitude,
        longitude,
        altitude_agl: origin.altitude_agl + p.up,
    };
    out.validate()?;
    Ok(out)
}

/// A ground position plus the height of an antenna mounted there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub position: LocalPoint,
    pub antenna_height: f64,
}

impl Endpoint {
    pub fn new(position: LocalPoint, antenna_height: f64) -> Self {
        Endpoint {
            position,
            antenna_height,
        }
    }

    fn z(&self) -> f64 {
        self.position.up + self.antenna_height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    /// Horizontal ground distance, meters.
    pub d2d: f64,
    /// Slant distance including the height difference, meters.
    pub d3d: f64,
}

pub fn distance_3d(bs: &Endpoint, ue: &Endpoint) -> Distances {
    let de = ue.position.east - bs.position.east;
    let dn = ue.position.north - bs.position.north;
    let dz = ue.z() - bs.z();
    let d2d = de.hypot(dn);
    Distances {
        d2d,
        d3d: d2d.hypot(dz),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bearing {
    /// Degrees clockwise from north, in [0, 360).
    pub azimuth: f64,
    /// Degrees above the horizontal at the BS antenna, in [-90, 90].
    pub elevation: f64,
}

/// Direction from the BS antenna toward the UE antenna.
///
/// A UE directly below the mast gets azimuth 0.
pub fn azimuth_elevation(bs: &Endpoint, ue: &Endpoint) -> Result<Bearing> {
    let de = ue.position.east - bs.position.east;
    let dn = ue.position.north - bs.position.north;
    let dz = ue.z() - bs.z();
    let horiz = de.hypot(dn);
    if horiz == 0.0 && dz == 0.0 {
        return Err(Error::domain("coincident BS and UE positions"));
    }
    let mut azimuth = de.atan2(dn).to_degrees().rem_euclid(360.0);
    if azimuth >= 360.0 {
        azimuth = 0.0;
    }
    let elevation = dz.atan2(horiz).to_degrees();
    Ok(Bearing { azimuth, elevation })
}

/// Cell of a square grid anchored at the projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridIndex {
    pub ix: i64,
    pub iy: i64,
}

impl GridIndex {
    pub fn new(ix: i64, iy: i64) -> Self {
        GridIndex { ix, iy }
    }

    /// Center of the cell for a grid of `grid_size` meters.
    pub fn center(&self, grid_size: f64) -> LocalPoint {
        LocalPoint::new(
            (self.ix as f64 + 0.5) * grid_size,
            (self.iy as f64 + 0.5) * grid_size,
            0.0,
        )
    }
}

pub fn bin_index(p: &LocalPoint, grid_size: f64) -> Result<GridIndex> {
    if !(grid_size > 0.0 && grid_size.is_finite()) {
        return Err(Error::validation("grid_size", "must be positive"));
    }
    if !(p.east.is_finite() && p.north.is_finite()) {
        return Err(Error::validation("position", "not finite"));
    }
    Ok(GridIndex {
        ix: (p.east / grid_size).floor() as i64,
        iy: (p.north / grid_size).floor() as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LosLabel {
    Los,
    Nlos,
}

/// Simple (non-self-intersecting) ring of geodetic vertices.
///
/// The closing vertex is implicit: a ring given with its first vertex repeated
/// at the end is normalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<GeodeticPoint>,
    pub label: LosLabel,
}

impl Polygon {
    pub fn new(mut vertices: Vec<GeodeticPoint>, label: LosLabel) -> Result<Self> {
        if vertices.len() > 1 {
            let (first, last) = (vertices[0], vertices[vertices.len() - 1]);
            if first.latitude == last.latitude && first.longitude == last.longitude {
                vertices.pop();
            }
        }
        if vertices.len() < 3 {
            return Err(Error::validation(
                "polygon",
                format!("{} distinct vertices, need at least 3", vertices.len()),
            ));
        }
        for v in &vertices {
            v.validate()?;
        }
        let poly = Polygon { vertices, label };
        if poly.self_intersects() {
            return Err(Error::validation("polygon", "ring self-intersects"));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[GeodeticPoint] {
        &self.vertices
    }

    fn planar(&self) -> Vec<(f64, f64)> {
        self.vertices
            .iter()
            .map(|v| (v.longitude, v.latitude))
            .collect()
    }

    fn self_intersects(&self) -> bool {
        let pts = self.planar();
        let n = pts.len();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in (i + 1)..n {
                // adjacent edges share a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn within_box(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && within_box(a, c, d))
        || (d2 == 0.0 && within_box(b, c, d))
        || (d3 == 0.0 && within_box(c, a, b))
        || (d4 == 0.0 && within_box(d, a, b))
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let len2 = (b.0 - a.0).powi(2) + (b.1 - a.1).powi(2);
    let tol = 1e-12 * len2.max(f64::MIN_POSITIVE);
    cross(a, b, p).abs() <= tol && within_box(p, a, b)
}

/// Even-odd containment test; points on an edge or vertex count as inside.
///
/// The tangent-plane projection is affine in (longitude, latitude) for a fixed
/// origin, so containment is evaluated directly on geodetic coordinates and
/// gives the same answer as projecting point and ring with a shared origin.
pub fn point_in_polygon(p: &GeodeticPoint, poly: &Polygon) -> bool {
    let q = (p.longitude, p.latitude);
    let pts = poly.planar();
    let n = pts.len();
    let mut inside = false;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if on_segment(q, a, b) {
            return true;
        }
        if (a.1 > q.1) != (b.1 > q.1) {
            let x = a.0 + (q.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if q.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Reads polygons from a GeoJSON `FeatureCollection`.
///
/// Each `Polygon` (outer ring only) or `MultiPolygon` feature becomes one or
/// more [`Polygon`]s labeled by the boolean `los` property (missing = NLOS).
pub fn parse_polygons_geojson(text: &str) -> Result<Vec<Polygon>> {
    let doc: Value = serde_json::from_str(text)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::validation("geojson", "expected a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::validation("geojson", "missing features array"))?;

    let mut out = Vec::new();
    for (i, feature) in features.iter().enumerate() {
        let los = feature
            .get("properties")
            .and_then(|p| p.get("los"))
            .and_then(Value::as_bool)
            .unwrap_or(false);
        let label = if los { LosLabel::Los } else { LosLabel::Nlos };
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::validation(format!("features[{i}]"), "missing geometry"))?;
        let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| Error::validation(format!("features[{i}]"), "missing coordinates"))?;
        let rings: Vec<&Value> = match kind {
            "Polygon" => vec![first_ring(coords, i)?],
            "MultiPolygon" => coords
                .as_array()
                .ok_or_else(|| Error::validation(format!("features[{i}]"), "bad MultiPolygon"))?
                .iter()
                .map(|poly| first_ring(poly, i))
                .collect::<Result<_>>()?,
            other => {
                return Err(Error::validation(
                    format!("features[{i}]"),
                    format!("unsupported geometry type {other:?}"),
                ))
            }
        };
        for ring in rings {
            out.push(Polygon::new(parse_ring(ring, i)?, label)?);
        }
    }
    Ok(out)
}

fn first_ring(polygon_coords: &Value, feature: usize) -> Result<&Value> {
    polygon_coords
        .as_array()
        .and_then(|rings| rings.first())
        .ok_or_else(|| Error::validation(format!("features[{feature}]"), "empty polygon"))
}

fn parse_ring(ring: &Value, feature: usize) -> Result<Vec<GeodeticPoint>> {
    let field = || format!("features[{feature}]");
    ring.as_array()
        .ok_or_else(|| Error::validation(field(), "ring is not an array"))?
        .iter()
        .map(|pos| {
            let pair = pos
                .as_array()
                .filter(|a| a.len() >= 2)
                .ok_or_else(|| Error::validation(field(), "position needs [lon, lat]"))?;
            let lon = pair[0].as_f64();
            let lat = pair[1].as_f64();
            match (lon, lat) {
                (Some(lon), Some(lat)) => GeodeticPoint::new(lat, lon),
                _ => Err(Error::validation(field(), "non-numeric coordinate")),
            }
        })
        .collect()
}

pub fn load_polygons(path: &Path) -> Result<Vec<Polygon>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_polygons_geojson(&text)
}

/// Serializes polygons as a GeoJSON `FeatureCollection` with closed rings.
pub fn polygons_to_geojson(polygons: &[Polygon]) -> Value {
    let features: Vec<Value> = polygons
        .iter()
        .map(|poly| {
            let mut ring: Vec<Value> = poly
                .vertices
                .iter()
                .map(|v| json!([v.longitude, v.latitude]))
                .collect();
            ring.push(ring[0].clone());
            json!({
                "type": "Feature",
                "properties": { "los": poly.label == LosLabel::Los },
                "geometry": { "type": "Polygon", "coordinates": [ring] },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gp(lat: f64, lon: f64) -> GeodeticPoint {
        GeodeticPoint::new(lat, lon).unwrap()
    }

    fn square(lat0: f64, lon0: f64, side: f64) -> Polygon {
        Polygon::new(
            vec![
                gp(lat0, lon0),
                gp(lat0, lon0 + side),
                gp(lat0 + side, lon0 + side),
                gp(lat0 + side, lon0),
            ],
            LosLabel::Los,
        )
        .unwrap()
    }

    #[test]
    fn to_local_identity() {
        let o = gp(47.0, 8.0);
        assert_eq!(to_local(&o, &o).unwrap(), LocalPoint::ORIGIN);
    }

    #[test]
    fn to_local_north_and_east_offsets() {
        // Oracle values: meridian arc integrated numerically over WGS84, and
        // N(lat)*cos(lat)*dlon for the parallel.
        let o = gp(47.0, 8.0);
        let north = to_local(&o, &gp(47.001, 8.0)).unwrap();
        assert!((north.north - 111.2).abs() < 0.2, "{north:?}");
        assert!((north.north - 111.170_851).abs() < 1e-3);
        assert!(north.east.abs() < 1e-9);

        let east = to_local(&o, &gp(47.0, 8.001)).unwrap();
        assert!((east.east - 75.9).abs() < 0.2, "{east:?}");
        assert!((east.east - 76.055_998).abs() < 1e-3);
    }

    #[test]
    fn to_local_rejects_far_and_invalid_points() {
        let o = gp(47.0, 8.0);
        assert!(to_local(&o, &gp(48.5, 8.0)).is_err());
        let bad = GeodeticPoint {
            latitude: 95.0,
            longitude: 0.0,
            altitude_agl: 0.0,
        };
        assert!(matches!(to_local(&o, &bad), Err(Error::Validation { .. })));
        assert!(GeodeticPoint::new(10.0, 181.0).is_err());
    }

    #[test]
    fn from_local_inverts_to_local() {
        let o = gp(46.95, 7.44);
        let p = gp(46.9612, 7.4277).with_altitude(3.0);
        let back = from_local(&o, &to_local(&o, &p).unwrap()).unwrap();
        assert!((back.latitude - p.latitude).abs() < 1e-12);
        assert!((back.longitude - p.longitude).abs() < 1e-12);
        assert!((back.altitude_agl - 3.0).abs() < 1e-12);
    }

    #[test]
    fn slant_distances() {
        let o = LocalPoint::ORIGIN;
        let d = distance_3d(&Endpoint::new(o, 10.0), &Endpoint::new(o, 10.0));
        assert_eq!(d.d2d, 0.0);
        assert_eq!(d.d3d, 0.0);

        let ue = LocalPoint::new(300.0, 0.0, 0.0);
        let d = distance_3d(&Endpoint::new(o, 29.4), &Endpoint::new(ue, 1.4));
        assert!((d.d2d - 300.0).abs() < 1e-12);
        assert!((d.d3d - 301.303_833).abs() < 1e-5);

        let d = distance_3d(&Endpoint::new(o, 24.5), &Endpoint::new(o, 2.1));
        assert!((d.d3d - 22.4).abs() < 1e-12);
    }

    #[test]
    fn bearings() {
        let bs = Endpoint::new(LocalPoint::ORIGIN, 2.0);
        let b =
            azimuth_elevation(&bs, &Endpoint::new(LocalPoint::new(0.0, 50.0, 0.0), 2.0)).unwrap();
        assert_eq!((b.azimuth, b.elevation), (0.0, 0.0));

        let bs = Endpoint::new(LocalPoint::ORIGIN, 24.5);
        let b =
            azimuth_elevation(&bs, &Endpoint::new(LocalPoint::new(100.0, 0.0, 0.0), 2.1)).unwrap();
        assert!((b.azimuth - 90.0).abs() < 1e-12);
        assert!((b.elevation - (-12.625_837)).abs() < 1e-5);

        let b =
            azimuth_elevation(&bs, &Endpoint::new(LocalPoint::new(0.0, -40.0, 0.0), 24.5)).unwrap();
        assert!((b.azimuth - 180.0).abs() < 1e-12);

        assert!(azimuth_elevation(&bs, &bs).is_err());
    }

    #[test]
    fn grid_indices() {
        let idx = |e, n| bin_index(&LocalPoint::new(e, n, 0.0), 5.0).unwrap();
        assert_eq!(idx(0.0, 0.0), GridIndex::new(0, 0));
        assert_eq!(idx(12.3, -0.1), GridIndex::new(2, -1));
        assert_eq!(idx(4.999, 4.999), GridIndex::new(0, 0));
        assert!(bin_index(&LocalPoint::ORIGIN, 0.0).is_err());
    }

    #[test]
    fn polygon_basics() {
        let sq = square(47.0, 8.0, 0.01);
        assert!(point_in_polygon(&gp(47.005, 8.005), &sq));
        assert!(!point_in_polygon(&gp(47.02, 8.02), &sq));
        // boundary and vertex count as inside
        assert!(point_in_polygon(&gp(47.0, 8.005), &sq));
        assert!(point_in_polygon(&gp(47.01, 8.01), &sq));
    }

    #[test]
    fn polygon_validation() {
        assert!(Polygon::new(vec![gp(0.0, 0.0), gp(0.0, 1.0)], LosLabel::Los).is_err());
        // closing vertex is stripped, leaving only two
        assert!(Polygon::new(
            vec![gp(0.0, 0.0), gp(0.0, 1.0), gp(0.0, 0.0)],
            LosLabel::Los
        )
        .is_err());
        let bowtie = vec![gp(0.0, 0.0), gp(1.0, 1.0), gp(1.0, 0.0), gp(0.0, 1.0)];
        assert!(Polygon::new(bowtie, LosLabel::Los).is_err());
        let closed = vec![gp(0.0, 0.0), gp(0.0, 1.0), gp(1.0, 1.0), gp(0.0, 0.0)];
        assert_eq!(
            Polygon::new(closed, LosLabel::Nlos)
                .unwrap()
                .vertices()
                .len(),
            3
        );
    }

    #[test]
    fn geojson_round_trip() {
        let polys = vec![square(47.0, 8.0, 0.01), {
            let mut p = square(47.1, 8.1, 0.02);
            p.label = LosLabel::Nlos;
            p
        }];
        let text = polygons_to_geojson(&polys).to_string();
        assert_eq!(parse_polygons_geojson(&text).unwrap(), polys);
    }

    #[test]
    fn geojson_rejects_bad_documents() {
        assert!(parse_polygons_geojson(r#"{"type":"Feature"}"#).is_err());
        let point = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{},"geometry":{"type":"Point","coordinates":[8,47]}}]}"#;
        assert!(parse_polygons_geojson(point).is_err());
    }

    proptest! {
        #[test]
        fn to_local_origin_is_zero(lat in -80.0f64..80.0, lon in -180.0f64..180.0) {
            let o = gp(lat, lon);
            prop_assert_eq!(to_local(&o, &o).unwrap(), LocalPoint::ORIGIN);
        }

        #[test]
        fn distance_symmetric_and_bounded(
            e1 in -3000.0f64..3000.0, n1 in -3000.0f64..3000.0, h1 in 0.0f64..60.0,
            e2 in -3000.0f64..3000.0, n2 in -3000.0f64..3000.0, h2 in 0.0f64..60.0,
        ) {
            let a = Endpoint::new(LocalPoint::new(e1, n1, 0.0), h1);
            let b = Endpoint::new(LocalPoint::new(e2, n2, 0.0), h2);
            let ab = distance_3d(&a, &b);
            let ba = distance_3d(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!(ab.d3d >= (h1 - h2).abs() - 1e-9);
            prop_assert!(ab.d3d >= ab.d2d);
        }

        #[test]
        fn azimuth_recovers_bearing(bearing in 0.0f64..360.0, dist in 1.0f64..5000.0) {
            let bs = Endpoint::new(LocalPoint::ORIGIN, 10.0);
            let ue = Endpoint::new(LocalPoint::from_polar(dist, bearing), 10.0);
            let b = azimuth_elevation(&bs, &ue).unwrap();
            let diff = (b.azimuth - bearing + 180.0).rem_euclid(360.0) - 180.0;
            prop_assert!(diff.abs() < 1e-9, "{} vs {}", b.azimuth, bearing);
            prop_assert!(b.elevation.abs() < 1e-12);
        }

        #[test]
        fn bin_index_translation(e in -1e4f64..1e4, n in -1e4f64..1e4, g in 0.5f64..20.0) {
            let p = LocalPoint::new(e, n, 0.0);
            let shifted = LocalPoint::new(e + g, n, 0.0);
            let a = bin_index(&p, g).unwrap();
            let b = bin_index(&shifted, g).unwrap();
            // (e + g) / g can round across an integer boundary when e / g is
            // within an ulp of one; allow only the exact shift otherwise.
            let exact = ((e / g).fract().abs() > 1e-9) && ((e / g).fract().abs() < 1.0 - 1e-9);
            if exact {
                prop_assert_eq!(b, GridIndex::new(a.ix + 1, a.iy));
            }
        }
    }
}
