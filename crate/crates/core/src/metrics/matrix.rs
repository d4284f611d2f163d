use rayon::prelude::*;

use super::{
    decompose_segments, fractal_dimension, region_tortuosity, global_calibre, knudtson_equivalent, local_calibre,
    vessel_density, Metric, MetricError, MetricParams, MetricRecord, Quantity, SegmentGraph,
    Units, VesselKind, VesselMap,
};
use crate::geometry::{DiscGeometry, Roi, RoiMask};
use crate::grid::{BinaryMask, Grid};
use crate::ingestion::SegmentationBundle;
use crate::meta::{Location, PixelScale};
use crate::num::Real;
use crate::raster::{distance_transform, skeletonize, Skeleton};

/// CRAE, CRVE and AVR over one region.
#[derive(Debug, Clone, PartialEq)]
pub struct BigVesselEquivalents<F> {
    pub crae: Option<Quantity<F>>,
    pub crve: Option<Quantity<F>>,
    pub avr: Option<F>,
    pub issues: Vec<(Metric, MetricError)>,
}

/// Knudtson equivalents from the mean calibres of segments touching `roi`.
/// A missing graph counts as a missing map.
pub fn big_vessel_equivalents<F: Real>(
    artery: Option<&SegmentGraph<F>>,
    vein: Option<&SegmentGraph<F>>,
    roi: &RoiMask,
    scale: &PixelScale,
) -> BigVesselEquivalents<F> {
    let side = |g: Option<&SegmentGraph<F>>, kind: VesselKind, map: VesselMap| {
        let g = g.ok_or(MetricError::MissingMap(map))?;
        let widths: Vec<F> =
            g.segments.iter().filter(|s| s.intersects(&roi.mask)).map(|s| s.mean_calibre).collect();
        knudtson_equivalent(&widths, kind)
    };
    let a = side(artery, VesselKind::Artery, VesselMap::Artery);
    let v = side(vein, VesselKind::Vein, VesselMap::Vein);
    let mut issues = Vec::new();
    let avr = match (&a, &v) {
        (Ok(a), Ok(v)) => Some(*a / *v),
        (Err(e), _) | (_, Err(e)) => {
            issues.push((Metric::Avr, e.clone()));
            None
        }
    };
    let crae = a.map_err(|e| issues.push((Metric::Crae, e))).ok().map(|px| Quantity::length(px, scale));
    let crve = v.map_err(|e| issues.push((Metric::Crve, e))).ok().map(|px| Quantity::length(px, scale));
    BigVesselEquivalents { crae, crve, avr, issues }
}

/// A cell of the metric matrix that could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricIssue {
    pub map: VesselMap,
    pub roi: Roi,
    pub metric: Metric,
    pub error: MetricError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricMatrix<F> {
    pub records: Vec<MetricRecord<F>>,
    pub issues: Vec<MetricIssue>,
}

impl<F> MetricMatrix<F> {
    pub fn get(&self, map: VesselMap, roi: Roi, metric: Metric) -> Option<&MetricRecord<F>> {
        self.records.iter().find(|r| r.map == map && r.roi == roi && r.metric == metric)
    }
}

/// Cells of the metric matrix for the given maps and regions.
///
/// FD, VD and global calibre are whole-image only. Local calibre and
/// tortuosity density are taken on every region, CRAE on the artery map,
/// CRVE on the vein map, and AVR (filed under the all-vessel map) where both
/// exist. Macula-centred images use the whole image only.
pub fn expected_cells(maps: &[VesselMap], rois: &[Roi], location: Location) -> Vec<(VesselMap, Roi, Metric)> {
    let rois: Vec<Roi> = rois
        .iter()
        .copied()
        .filter(|&r| location != Location::MaculaCentred || r == Roi::WholeImage)
        .collect();
    let mut cells = Vec::new();
    for &map in &VesselMap::ALL {
        if !maps.contains(&map) {
            continue;
        }
        for &roi in &rois {
            if roi == Roi::WholeImage {
                cells.push((map, roi, Metric::FractalDimension));
                cells.push((map, roi, Metric::VesselDensity));
                cells.push((map, roi, Metric::GlobalCalibre));
            }
            cells.push((map, roi, Metric::LocalCalibre));
            cells.push((map, roi, Metric::TortuosityDensity));
            match map {
                VesselMap::Artery => cells.push((map, roi, Metric::Crae)),
                VesselMap::Vein => cells.push((map, roi, Metric::Crve)),
                VesselMap::AllVessel => {}
            }
        }
    }
    if maps.contains(&VesselMap::Artery) && maps.contains(&VesselMap::Vein) {
        for &roi in &rois {
            cells.push((VesselMap::AllVessel, roi, Metric::Avr));
        }
    }
    cells
}

struct MapData<F> {
    map: VesselMap,
    mask: BinaryMask,
    skeleton: Skeleton,
    graph: SegmentGraph<F>,
}

/// Computes every cell of [`expected_cells`] for the masks in `bundle`.
///
/// Cells that fail are reported in `issues` instead of `records`.
pub fn measure_all<F: Real>(
    bundle: &SegmentationBundle,
    rois: &[RoiMask],
    disc: Option<&DiscGeometry<F>>,
    scale: &PixelScale,
    location: Location,
    params: &MetricParams,
) -> MetricMatrix<F> {
    let present: Vec<(VesselMap, &BinaryMask)> = [
        (VesselMap::AllVessel, bundle.binary_vessel.as_ref()),
        (VesselMap::Artery, bundle.artery.as_ref()),
        (VesselMap::Vein, bundle.vein.as_ref()),
    ]
    .into_iter()
    .filter_map(|(k, m)| m.map(|m| (k, m)))
    .collect();
    let maps: Vec<VesselMap> = present.iter().map(|p| p.0).collect();
    let roi_keys: Vec<Roi> = rois.iter().map(|r| r.roi).collect();
    let cells = expected_cells(&maps, &roi_keys, location);

    let data: Vec<MapData<F>> = present
        .par_iter()
        .map(|&(map, mask)| {
            let skeleton = skeletonize(mask);
            let edt: Grid<F> = distance_transform(mask);
            let graph = decompose_segments(&skeleton, disc, &edt, map, params.min_segment_px);
            MapData { map, mask: mask.clone(), skeleton, graph }
        })
        .collect();
    let find = |map: VesselMap| data.iter().find(|d| d.map == map);
    let roi_mask = |roi: Roi| rois.iter().find(|r| r.roi == roi).expect("cell roi supplied");

    let results: Vec<(VesselMap, Roi, Metric, Result<(F, Units), MetricError>)> = cells
        .par_iter()
        .map(|&(map, roi, metric)| {
            let r = roi_mask(roi);
            let d = find(map);
            let value = match metric {
                Metric::Avr => {
                    let e = big_vessel_equivalents(
                        find(VesselMap::Artery).map(|d| &d.graph),
                        find(VesselMap::Vein).map(|d| &d.graph),
                        r,
                        scale,
                    );
                    e.avr.map(|v| (v, Units::Dimensionless)).ok_or_else(|| {
                        e.issues.into_iter().find(|i| i.0 == Metric::Avr).expect("avr issue").1
                    })
                }
                _ => {
                    let d = d.expect("cell map present");
                    cell_value(d, r, metric, scale, params)
                }
            };
            (map, roi, metric, value)
        })
        .collect();

    let mut matrix = MetricMatrix { records: Vec::new(), issues: Vec::new() };
    for (map, roi, metric, value) in results {
        match value {
            Ok((value, units)) => matrix.records.push(MetricRecord { map, roi, metric, value, units }),
            Err(error) => matrix.issues.push(MetricIssue { map, roi, metric, error }),
        }
    }
    matrix
}

fn cell_value<F: Real>(
    d: &MapData<F>,
    r: &RoiMask,
    metric: Metric,
    scale: &PixelScale,
    params: &MetricParams,
) -> Result<(F, Units), MetricError> {
    let q = |q: Quantity<F>| (q.value, q.units);
    match metric {
        Metric::FractalDimension => fractal_dimension(&d.mask, r).map(|v| (v, Units::Dimensionless)),
        Metric::VesselDensity => {
            if !r.mask.any() {
                return Err(MetricError::EmptyRoi);
            }
            Ok((vessel_density(&d.mask, r), Units::Dimensionless))
        }
        Metric::GlobalCalibre => global_calibre(&d.mask, &d.skeleton, r, scale).map(q),
        Metric::LocalCalibre => local_calibre(&d.graph, r, scale).map(q),
        Metric::TortuosityDensity => {
            region_tortuosity(&d.graph, r, &params.tortuosity).map(|v| (v, Units::Dimensionless))
        }
        Metric::Crae => {
            big_vessel_equivalents(Some(&d.graph), None, r, scale).crae.map(q).ok_or_else(|| {
                too_few(&d.graph, r)
            })
        }
        Metric::Crve => {
            big_vessel_equivalents(None, Some(&d.graph), r, scale).crve.map(q).ok_or_else(|| {
                too_few(&d.graph, r)
            })
        }
        Metric::Avr => unreachable!("handled with both maps"),
    }
}

fn too_few<F: Real>(g: &SegmentGraph<F>, r: &RoiMask) -> MetricError {
    MetricError::TooFewVessels { found: g.segments.iter().filter(|s| s.intersects(&r.mask)).count() }
}
