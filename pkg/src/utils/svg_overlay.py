"""
SVG overlay of attention weights on region boxes
"""
import xml.etree.ElementTree as ET

from src.core.exceptions import UsageError
from src.schemas.encoding import TopKDocument

SVG_NAMESPACE = "http://www.w3.org/2000/svg"
FOCUS_COLOR = "#d62728"
SOURCE_COLOR = "#1f77b4"


def _number(value: float) -> str:
    return f"{value:.6g}"


def _rect(parent: ET.Element, bbox, color: str, opacity: float, dashed: bool = False) -> ET.Element:
    cx, cy, w, h = bbox
    attributes = {
        "x": _number(cx - w / 2.0),
        "y": _number(cy - h / 2.0),
        "width": _number(w),
        "height": _number(h),
        "fill": color,
        "fill-opacity": _number(0.5 * opacity),
        "stroke": color,
        "stroke-opacity": _number(opacity),
        "stroke-width": "2",
    }
    if dashed:
        attributes["stroke-dasharray"] = "6 3"
    return ET.SubElement(parent, "rect", attributes)


def render_overlay(document: TopKDocument, focus: int, width: float, height: float) -> str:
    """Focus box dashed, each top-k source filled with opacity equal to its weight"""
    if not 0 <= focus < len(document.nodes):
        raise UsageError(f"focus node {focus} outside 0..{len(document.nodes) - 1}")
    node = document.nodes[focus]

    svg = ET.Element(
        "svg",
        {
            "xmlns": SVG_NAMESPACE,
            "width": _number(width),
            "height": _number(height),
            "viewBox": f"0 0 {_number(width)} {_number(height)}",
        },
    )
    title = ET.SubElement(svg, "title")
    title.text = f"{document.image_id} {document.graph} attention of node {focus}"

    for entry in node.top:
        rect = _rect(svg, entry.bbox, SOURCE_COLOR, entry.weight)
        ET.SubElement(rect, "title").text = f"region {entry.source}: {entry.weight:.4f}"
    _rect(svg, node.bbox, FOCUS_COLOR, 1.0, dashed=True).set("fill-opacity", "0")

    ET.indent(svg)
    return ET.tostring(svg, encoding="unicode") + "\n"
