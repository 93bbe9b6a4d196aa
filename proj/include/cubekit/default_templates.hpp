#ifndef CUBEKIT_DEFAULT_TEMPLATES_HPP
#define CUBEKIT_DEFAULT_TEMPLATES_HPP

#include <string_view>

namespace cubekit {

// Mirror of data/templates.tsv; the unit tests keep the two identical.
inline constexpr std::string_view kDefaultTemplates = R"TSV(# id	pair	pattern
# One template per line, tab separated. <caption> marks where the object's
# text goes when the question kind is caption; <label> marks where the
# rendered token group goes for every other question kind.
cap-p2d-1	caption->point2d	Point to the center of the region this sentence describes: <caption>
cap-p2d-2	caption->point2d	Where is the center of <caption> in the image?
cap-b2d-1	caption->box2d	Provide the 2D bounding box of the region this sentence describes: <caption>
cap-b2d-2	caption->box2d	What is the 2D box of <caption>?
cap-dep-1	caption->depth	How far from the camera is the region this sentence describes: <caption>
cap-dep-2	caption->depth	What is the depth of <caption>?
cap-p3d-1	caption->point3d	Provide the 3D center of the region this sentence describes: <caption>
cap-p3d-2	caption->point3d	Where is the 3D center of <caption>?
cap-b3d-1	caption->box3d	Provide the 3D bounding box of the region this sentence describes: <caption>
cap-b3d-2	caption->box3d	Provide 3D bounding box of the region in the image that this sentence describes: <caption>
cap-b3d-3	caption->box3d	What is the 3D box of <caption>?
p2d-b2d-1	point2d->box2d	Provide the 2D bounding box of the object at <label>.
p2d-b2d-2	point2d->box2d	What is the 2D box of the object centered at <label>?
p2d-cap-1	point2d->caption	Describe the object at <label>.
p2d-cap-2	point2d->caption	What is the object centered at <label>?
p2d-dep-1	point2d->depth	How far from the camera is the object at <label>?
p2d-dep-2	point2d->depth	What is the depth of the object centered at <label>?
p2d-p3d-1	point2d->point3d	Provide the 3D center of the object at <label>.
p2d-p3d-2	point2d->point3d	Where in 3D is the object centered at <label>?
p2d-b3d-1	point2d->box3d	Provide the 3D bounding box of the object at <label>.
p2d-b3d-2	point2d->box3d	What is the 3D box of the object centered at <label>?
b2d-p2d-1	box2d->point2d	Point to the center of the region <label>.
b2d-p2d-2	box2d->point2d	Where is the center of the object in <label>?
b2d-cap-1	box2d->caption	Describe the region <label>.
b2d-cap-2	box2d->caption	What is the object in the region <label>?
b2d-dep-1	box2d->depth	How far from the camera is the object in <label>?
b2d-dep-2	box2d->depth	What is the depth of the region <label>?
b2d-p3d-1	box2d->point3d	Provide the 3D center of the object in <label>.
b2d-p3d-2	box2d->point3d	Where in 3D is the object in the region <label>?
b2d-b3d-1	box2d->box3d	Provide the 3D bounding box of the region <label>.
b2d-b3d-2	box2d->box3d	What is the 3D box of the object in <label>?
p3d-b2d-1	point3d->box2d	Provide the 2D bounding box of the object at 3D location <label>.
p3d-b2d-2	point3d->box2d	What is the 2D box of the object whose 3D center is <label>?
p3d-cap-1	point3d->caption	Describe the object at 3D location <label>.
p3d-cap-2	point3d->caption	What is the object whose 3D center is <label>?
p3d-b3d-1	point3d->box3d	Provide the 3D bounding box of the object at 3D location <label>.
p3d-b3d-2	point3d->box3d	What is the 3D box of the object whose 3D center is <label>?
b3d-b2d-1	box3d->box2d	Provide the 2D bounding box of the object with 3D box <label>.
b3d-b2d-2	box3d->box2d	Where does the 3D box <label> appear in the image?
b3d-cap-1	box3d->caption	Describe the object with 3D box <label>.
b3d-cap-2	box3d->caption	What is the object inside the 3D box <label>?
)TSV";

} // namespace cubekit

#endif // CUBEKIT_DEFAULT_TEMPLATES_HPP
