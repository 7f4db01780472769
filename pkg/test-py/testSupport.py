import hashlib
import os
import pathlib

import numpy as np

from dhflex.core.classes import (
    HOURS_PER_DAY,
    Constants,
    Dataset,
    MeterMeta,
    MeterSeries,
)

binarySuffixes = {".png", ".jpg", ".jpeg"}

# rho * cp == 1, so heat in kW equals flow times spread
unitConstants = Constants(rho=1000.0, cp=0.001)

# temperatures used for padding hours: no spread, well below any limit
PAD_TEMPERATURE = 40.0


def directoryTreeToList(path):
    path = pathlib.Path(path).resolve()
    prefixLength = len(os.fspath(path))

    paths = sorted(_allPaths(path))
    lines = []

    for path in paths:
        lines.append(os.fspath(path)[prefixLength:])
        if not path.is_dir():
            if path.suffix in binarySuffixes:
                h = hashlib.sha1()
                h.update(path.read_bytes())
                lines.append(f"SHA-1: {h.hexdigest()}")
            else:
                for line in path.read_text().splitlines():
                    lines.append(line)

    return lines


ignore = {".DS_Store"}


def _allPaths(path):
    for childPath in path.iterdir():
        if childPath.name in ignore:
            continue
        if childPath.is_dir():
            yield from _allPaths(childPath)
        else:
            yield childPath


def _pad(values, fill):
    values = list(values)
    remainder = -len(values) % HOURS_PER_DAY
    return values + [fill] * remainder


def makeMeta(meterId, **kwargs):
    fields = dict(
        qMax=100.0,
        qMean=50.0,
        tRlMean=50.0,
        tRlMax=70.0,
        tRlLimit=55.0,
        consumerType="residential",
    )
    fields.update(kwargs)
    return MeterMeta(meterId=meterId, **fields)


def makeMeter(meterId, flow, deltaT=1.0, tReturn=50.0, constants=unitConstants):
    """A meter whose heat follows the identity exactly. Scalars are broadcast;
    the series is padded to whole days with idle hours."""
    flow = np.asarray(flow, dtype=np.float64)
    deltaT = np.broadcast_to(np.asarray(deltaT, dtype=np.float64), flow.shape)
    tReturn = np.broadcast_to(np.asarray(tReturn, dtype=np.float64), flow.shape)
    tSupply = tReturn + deltaT
    heat = constants.rhoCp * deltaT * flow
    return MeterSeries(
        meterId=meterId,
        flow=_pad(flow, 0.0),
        tSupply=_pad(tSupply, PAD_TEMPERATURE),
        tReturn=_pad(tReturn, PAD_TEMPERATURE),
        heat=_pad(heat, 0.0),
    )


def makeDataset(*meters, metas=None):
    metas = dict(metas or {})
    for meter in meters:
        metas.setdefault(meter.meterId, makeMeta(meter.meterId))
    hours = meters[0].hours if meters else 0
    return Dataset(meters=meters, metas=metas, hours=hours)


def syntheticDataset(days=7, seed=0, meterIds=None):
    from dhflex.synth.generator import GenSpec, defaultMetas, generate

    metas = [
        meta
        for meta in defaultMetas()
        if meterIds is None or meta.meterId in meterIds
    ]
    return generate(GenSpec(metas=metas, days=days, seed=seed), Constants())
