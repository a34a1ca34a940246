//! GeoJSON FeatureCollection ingestion (Polygon features, outer ring only).

use std::collections::HashMap;

use serde_json::Value;

use super::{geometry, Building, BuildingMap, MapError, Point};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// Coordinates are already planar meters.
    #[default]
    Planar,
    /// Longitude/latitude degrees, projected equirectangularly about the
    /// centroid of all vertices.
    Equirectangular,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub projection: Projection,
}

fn malformed(msg: impl Into<String>) -> MapError {
    MapError::Malformed(msg.into())
}

fn parse_ring(index: usize, v: &Value) -> Result<Vec<Point>, MapError> {
    let arr = v
        .as_array()
        .ok_or_else(|| malformed(format!("feature {index}: ring is not an array")))?;
    arr.iter()
        .map(|pos| {
            let c = pos
                .as_array()
                .filter(|c| c.len() >= 2)
                .ok_or_else(|| malformed(format!("feature {index}: bad position")))?;
            match (c[0].as_f64(), c[1].as_f64()) {
                (Some(x), Some(y)) => Ok(Point::new(x, y)),
                _ => Err(malformed(format!("feature {index}: non-numeric coordinate"))),
            }
        })
        .collect()
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn declares_geographic_crs(doc: &Value) -> bool {
    doc.pointer("/crs/properties/name")
        .and_then(Value::as_str)
        .is_some_and(|name| name.contains("CRS84") || name.contains("4326"))
}

// Building-sized rings expressed in degrees have areas around 1e-8 square units.
fn looks_geographic(rings: &[Vec<Point>]) -> bool {
    let in_range = rings
        .iter()
        .flatten()
        .all(|p| p.x.abs() <= 180.0 && p.y.abs() <= 90.0);
    if !in_range || rings.is_empty() {
        return false;
    }
    let mut areas: Vec<f64> = rings
        .iter()
        .filter(|r| r.len() >= 3)
        .map(|r| geometry::signed_area(r).abs())
        .collect();
    if areas.is_empty() {
        return false;
    }
    areas.sort_by(f64::total_cmp);
    areas[areas.len() / 2] < 1e-6
}

fn project_equirectangular(rings: &mut [Vec<Point>]) {
    let n = rings.iter().map(Vec::len).sum::<usize>().max(1) as f64;
    let (sx, sy) = rings
        .iter()
        .flatten()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (lon0, lat0) = (sx / n, sy / n);
    let k = lat0.to_radians().cos();
    for p in rings.iter_mut().flatten() {
        *p = Point::new(
            EARTH_RADIUS_M * (p.x - lon0).to_radians() * k,
            EARTH_RADIUS_M * (p.y - lat0).to_radians(),
        );
    }
}

pub fn load_geojson(raw: &[u8], opts: LoadOptions) -> Result<BuildingMap, MapError> {
    let doc: Value = serde_json::from_slice(raw).map_err(|e| malformed(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(malformed("top-level object is not a FeatureCollection"));
    }
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing features array"))?;

    let mut rings = Vec::with_capacity(features.len());
    let mut ids = Vec::with_capacity(features.len());
    for (index, f) in features.iter().enumerate() {
        let geom = f
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| malformed(format!("feature {index}: missing geometry")))?;
        let kind = geom.get("type").and_then(Value::as_str).unwrap_or("");
        if kind != "Polygon" {
            return Err(MapError::NotPolygon {
                index,
                kind: kind.to_string(),
            });
        }
        let outer = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .and_then(|rs| rs.first())
            .ok_or_else(|| malformed(format!("feature {index}: polygon has no rings")))?;
        rings.push(parse_ring(index, outer)?);
        ids.push(
            f.pointer("/properties/id")
                .and_then(id_string)
                .or_else(|| f.get("id").and_then(id_string)),
        );
    }

    match opts.projection {
        Projection::Planar => {
            if declares_geographic_crs(&doc) || looks_geographic(&rings) {
                return Err(MapError::GeographicCoordinates);
            }
        }
        Projection::Equirectangular => project_equirectangular(&mut rings),
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for id in ids.iter().flatten() {
        *counts.entry(id.as_str()).or_default() += 1;
    }
    let unique: Vec<Option<String>> = ids
        .iter()
        .map(|id| id.clone().filter(|s| counts[s.as_str()] == 1))
        .collect();

    let buildings = rings
        .into_iter()
        .zip(unique)
        .enumerate()
        .map(|(i, (ring, id))| Building::from_ring(i, ring, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BuildingMap::new(buildings))
}

/// Serializes a map as a planar GeoJSON FeatureCollection, one feature per
/// building in id order.
pub fn to_geojson(map: &BuildingMap) -> Value {
    let features: Vec<Value> = map
        .buildings()
        .iter()
        .map(|b| {
            let mut ring: Vec<Value> = b
                .footprint
                .iter()
                .map(|p| serde_json::json!([p.x, p.y]))
                .collect();
            ring.push(ring[0].clone());
            serde_json::json!({
                "type": "Feature",
                "properties": { "id": b.id.0 },
                "geometry": { "type": "Polygon", "coordinates": [ring] },
            })
        })
        .collect();
    serde_json::json!({ "type": "FeatureCollection", "features": features })
}
