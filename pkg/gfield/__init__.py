"""
GField - G-expectations of spatial and spatial-temporal G-white noise

"""
# License: GPLv3, see License.txt
