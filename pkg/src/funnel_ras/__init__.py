"""Funnel-based controller synthesis for reach-avoid-stay specifications."""
