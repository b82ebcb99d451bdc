"""Physical measurements over simulation states"""
