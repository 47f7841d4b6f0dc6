#![allow(clippy::approx_constant)]

// Analysis taps in correlation order: band[n] = sum_k taps[k] * x[(2n + k) mod N].

pub(crate) const HAAR: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

pub(crate) const DB1: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

pub(crate) const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

pub(crate) const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

pub(crate) const DB16: [f64; 32] = [
    0.003189220925347738,
    0.034907714323673344,
    0.16506428348885313,
    0.4303127228460038,
    0.637356332083789,
    0.4402902568863569,
    -0.08975108940248964,
    -0.3270633105279177,
    -0.027918208133028276,
    0.2111906939471043,
    0.027340263752716042,
    -0.1323883055638104,
    -0.006239722752474872,
    0.07592423604427631,
    -0.007588974368857738,
    -0.03688839769173014,
    0.01029765964095597,
    0.013993768859828731,
    -0.006990014563413916,
    -0.00364427962149839,
    0.003128023381206269,
    0.00040789698084971285,
    -0.0009410217493595676,
    0.00011424152003872239,
    0.00017478724522533817,
    -6.103596621410936e-05,
    -1.3945668988208893e-05,
    1.1336608661276258e-05,
    -1.0435713423116066e-06,
    -7.363656785451205e-07,
    2.3087840868575457e-07,
    -2.109339630100743e-08,
];

pub(crate) const SYM2: [f64; 4] = [
    0.48296291314469025,
    0.836516303737469,
    0.22414386804185735,
    -0.12940952255092145,
];

pub(crate) const SYM4: [f64; 8] = [
    0.0322231006040427,
    -0.012603967262037833,
    -0.09921954357684722,
    0.29785779560527736,
    0.8037387518059161,
    0.49761866763201545,
    -0.02963552764599851,
    -0.07576571478927333,
];

pub(crate) const SYM8: [f64; 16] = [
    0.0018899503327594609,
    -0.0003029205147213668,
    -0.01495225833704823,
    0.003808752013890615,
    0.049137179673607506,
    -0.027219029917056003,
    -0.05194583810770904,
    0.3644418948353314,
    0.7771857517005235,
    0.4813596512583722,
    -0.061273359067658524,
    -0.1432942383508097,
    0.007607487324917605,
    0.03169508781149298,
    -0.0005421323317911481,
    -0.0033824159510061256,
];

pub(crate) const SYM20: [f64; 40] = [
    -6.329129044776395e-07,
    -3.2567026420174407e-07,
    1.22872527779612e-05,
    4.525422209151636e-06,
    -0.00011739133516291466,
    -2.6615550335516086e-05,
    0.0007476108597820572,
    0.0001254409172306726,
    -0.0034716478028440734,
    -0.0006111263857992088,
    0.012157040948785737,
    0.0019385970672402002,
    -0.035373336756604236,
    -0.0068437019650692274,
    0.08891966802819956,
    0.03625095165393308,
    -0.16057829841525254,
    -0.0510883429210674,
    0.47199147510148703,
    0.75116272842273,
    0.4058314443484506,
    -0.02981936888033373,
    -0.07899434492839816,
    0.025579349509413946,
    0.008123228356009682,
    -0.031629437144957966,
    -0.003313857383623359,
    0.01700404902339034,
    0.0014230873594621453,
    -0.006606585799088861,
    -0.0003052628317957281,
    0.002088994708190198,
    7.215991188074035e-05,
    -0.0004947310915672655,
    -1.928412300645204e-05,
    7.992967835772481e-05,
    3.025666062736966e-06,
    -7.919361411976999e-06,
    -1.9015675890554106e-07,
    3.695537474835221e-07,
];

pub(crate) const COIF1: [f64; 6] = [
    -0.07273261951252645,
    0.3378976624574818,
    0.8525720202116004,
    0.3848648468648578,
    -0.07273261951252645,
    -0.015655728135791993,
];

pub(crate) const COIF2: [f64; 12] = [
    0.01638733646320364,
    -0.04146493678687178,
    -0.0673725547237256,
    0.3861100668227629,
    0.8127236354494135,
    0.4170051844232391,
    -0.07648859907828076,
    -0.05943441864643109,
    0.02368017194684777,
    0.005611434819368834,
    -0.0018232088709110323,
    -0.000720549445520347,
];

pub(crate) const COIF4: [f64; 24] = [
    0.000892313902537003,
    -0.001629492425226786,
    -0.007346167936268051,
    0.01606894713157503,
    0.02668230466960483,
    -0.08126671024919373,
    -0.05607731960356926,
    0.41530842700068227,
    0.7822389344242826,
    0.43438603311435653,
    -0.06662747236681717,
    -0.09622042453595264,
    0.03933442260558915,
    0.02508225333794961,
    -0.015211728187697211,
    -0.0056582838001308835,
    0.0037514346971460866,
    0.0012665610789256603,
    -0.0005890202246332165,
    -0.0002599743371222568,
    6.233885431278719e-05,
    3.1229861599195265e-05,
    -3.259647940030751e-06,
    -1.7849909144933469e-06,
];

pub(crate) const COIF8: [f64; 48] = [
    2.9543365214148865e-06,
    -4.368264820320075e-06,
    -4.8296315214092946e-05,
    7.54736783816504e-05,
    0.0003712949956074124,
    -0.0006235604474579403,
    -0.001783260008597197,
    0.0033008250106161103,
    0.005994849192155886,
    -0.012742370632719796,
    -0.014978462081708435,
    0.03937203787797985,
    0.02882862175928801,
    -0.11016997698347017,
    -0.04371898336594559,
    0.43120981555508764,
    0.7601133020179406,
    0.44344254984152603,
    -0.05186074316118868,
    -0.12121116823149648,
    0.04118580667625654,
    0.04825237108568226,
    -0.026656710542648603,
    -0.01898524469525487,
    0.014117470077618783,
    0.007065827011035097,
    -0.006156659548258421,
    -0.0025440037102452736,
    0.002235649422048103,
    0.0008967760630796798,
    -0.0006871716433480045,
    -0.00029777893219564,
    0.00018169287648431021,
    8.754452091843062e-05,
    -4.147478606916182e-05,
    -2.1802000767010356e-05,
    8.031502995440787e-06,
    4.496936443579392e-06,
    -1.2754542996407565e-06,
    -7.515021558886325e-07,
    1.589351722153065e-07,
    9.772418508367799e-08,
    -1.454000853375353e-08,
    -9.271205591546297e-09,
    8.669995082338711e-10,
    5.704810333909736e-10,
    -2.5254234938854572e-11,
    -1.7079895947055486e-11,
];

// 62-tap discrete Meyer, orthonormalized (nearest orthonormal filter to the
// standard FIR approximation, which is not exactly paraunitary).
pub(crate) const DMEY: [f64; 62] = [
    3.02011103357003e-07,
    -3.6984922268149706e-07,
    -3.353307514031333e-07,
    -3.143470663301598e-06,
    -1.329133225788688e-05,
    -1.145801893911432e-05,
    2.6866772582096452e-05,
    -4.057418973161758e-05,
    -2.016304058249739e-05,
    7.035530104349562e-05,
    4.229026989981501e-05,
    -0.00020897954875768245,
    -6.429838961742007e-05,
    0.00024799157284944147,
    0.0006239384049331715,
    -0.00033044559334833044,
    -0.00274801782096806,
    0.0020765096009157983,
    0.006121067959158671,
    -0.00634556716471696,
    -0.0110679057349866,
    0.015193468674688584,
    0.01745707203295093,
    -0.03209582224020844,
    -0.02431917252944739,
    0.06363271339746002,
    0.030655458999784547,
    -0.1327125911782808,
    -0.035032811841859045,
    0.44407021553346077,
    0.7437781404877417,
    0.4440702172994152,
    -0.03503281760535656,
    -0.13271260847834807,
    0.030655445892550225,
    0.06363260421628168,
    -0.02431887944081874,
    -0.032095440515000614,
    0.017457228341782764,
    0.01519509016383271,
    -0.011070373082662111,
    -0.006344965586048304,
    0.006116378197838259,
    0.002072824461728934,
    -0.0027522426441543694,
    -0.000336686538099279,
    0.0006207301282896093,
    0.0002489222617379918,
    -7.557707817578143e-05,
    -0.0002211659876756217,
    3.1107552373972014e-05,
    5.1517256238234036e-05,
    4.4657681776000845e-05,
    -2.457664596628522e-06,
    -3.415820700943481e-05,
    4.882436117171555e-06,
    2.2866927356641125e-05,
    7.821124146057595e-06,
    2.1586313707429348e-06,
    -6.98655382677236e-06,
    1.114973702336268e-06,
    9.104640956528505e-07,
];

pub(crate) const BIOR1_1_DEC_LO: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

pub(crate) const BIOR1_1_DEC_HI: [f64; 2] = [0.7071067811865476, -0.7071067811865476];

pub(crate) const BIOR1_1_REC_LO: [f64; 2] = [0.7071067811865476, 0.7071067811865476];

pub(crate) const BIOR1_1_REC_HI: [f64; 2] = [-0.7071067811865476, 0.7071067811865476];

pub(crate) const BIOR1_3_DEC_LO: [f64; 6] = [
    -0.08838834764831845,
    0.08838834764831845,
    0.7071067811865476,
    0.7071067811865476,
    0.08838834764831845,
    -0.08838834764831845,
];

pub(crate) const BIOR1_3_DEC_HI: [f64; 6] = [0.0, -0.0, 0.7071067811865476, -0.7071067811865476, 0.0, -0.0];

pub(crate) const BIOR1_3_REC_LO: [f64; 6] = [0.0, 0.0, 0.7071067811865476, 0.7071067811865476, 0.0, 0.0];

pub(crate) const BIOR1_3_REC_HI: [f64; 6] = [
    0.08838834764831845,
    0.08838834764831845,
    -0.7071067811865476,
    0.7071067811865476,
    -0.08838834764831845,
    -0.08838834764831845,
];

pub(crate) const BIOR2_2_DEC_LO: [f64; 6] = [
    -0.1767766952966369,
    0.3535533905932738,
    1.0606601717798212,
    0.3535533905932738,
    -0.1767766952966369,
    0.0,
];

pub(crate) const BIOR2_2_DEC_HI: [f64; 6] = [
    0.0,
    -0.0,
    0.3535533905932738,
    -0.7071067811865476,
    0.3535533905932738,
    -0.0,
];

pub(crate) const BIOR2_2_REC_LO: [f64; 6] = [
    0.0,
    0.0,
    0.3535533905932738,
    0.7071067811865476,
    0.3535533905932738,
    0.0,
];

pub(crate) const BIOR2_2_REC_HI: [f64; 6] = [
    0.1767766952966369,
    0.3535533905932738,
    -1.0606601717798212,
    0.3535533905932738,
    0.1767766952966369,
    0.0,
];

pub(crate) const BIOR3_3_DEC_LO: [f64; 8] = [
    0.06629126073623882,
    -0.1988737822087165,
    -0.15467960838455727,
    0.9943689110435825,
    0.9943689110435825,
    -0.15467960838455727,
    -0.1988737822087165,
    0.06629126073623882,
];

pub(crate) const BIOR3_3_DEC_HI: [f64; 8] = [
    0.0,
    -0.0,
    0.1767766952966369,
    -0.5303300858899106,
    0.5303300858899106,
    -0.1767766952966369,
    0.0,
    -0.0,
];

pub(crate) const BIOR3_3_REC_LO: [f64; 8] = [
    0.0,
    0.0,
    0.1767766952966369,
    0.5303300858899106,
    0.5303300858899106,
    0.1767766952966369,
    0.0,
    0.0,
];

pub(crate) const BIOR3_3_REC_HI: [f64; 8] = [
    -0.06629126073623882,
    -0.1988737822087165,
    0.15467960838455727,
    0.9943689110435825,
    -0.9943689110435825,
    -0.15467960838455727,
    0.1988737822087165,
    0.06629126073623882,
];
